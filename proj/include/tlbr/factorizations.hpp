#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tlbr/frame_kernels.hpp"
#include "tlbr/random.hpp"
#include "tlbr/tensor.hpp"

namespace tlbr {

/// Frame-wise SVD kept in the Fourier domain. `sigma[s]` holds the singular
/// values of frame s, descending.
struct SpectralSVD {
  SpectralTensor U;
  std::vector<Eigen::VectorXd> sigma;
  SpectralTensor V;

  Index rank() const { return sigma.empty() ? 0 : static_cast<Index>(sigma[0].size()); }
  /// The f-diagonal S as a spectral tensor (r x r, or rows x cols when full).
  SpectralTensor S(Index rows, Index cols) const;
  /// Singular tube i (zero-based) in the spatial domain.
  Tube tube(Index i) const;
};

SpectralSVD t_svd_spectral(const SpectralTensor& a, bool economy = true);

struct TSVD {
  Tensor3 U;
  Tensor3 S;
  Tensor3 V;

  Index rank() const { return S.cols(); }
  Tube tube(Index i) const { return S.tube(i, i); }
  /// Frobenius norm of singular tube i.
  double sigma(Index i) const;
};

TSVD t_svd(const Tensor3& a, bool economy = true);
/// Leading k triplets; throws IndexOutOfRange unless 1 <= k <= min(rows, cols).
TSVD truncated_tsvd(const Tensor3& a, Index k);
/// U * S * V^H.
Tensor3 reconstruct(const TSVD& t);

struct TQR {
  Tensor3 Q;
  Tensor3 R;
};

TQR t_qr(const Tensor3& a, bool economy = true);

struct Normalized {
  LateralSlice Y;
  Tube a;
  /// Every frame was degenerate; Y holds random unit frames and a = 0.
  bool zero_slice = false;
};

/// Scales each frame of X to unit length. Degenerate frames get a seeded
/// random unit vector and a zero coefficient.
Normalized normalize_slice(const LateralSlice& x, std::uint64_t seed);

struct SpectralNormalized {
  SpectralTensor y;
  SpectralTensor a;          // 1 x 1 tube
  std::vector<bool> degenerate;
  bool zero_slice = false;
};

/// Spectral normalization of a lateral slice. A frame counts as degenerate
/// when its norm is at most `zero_tol`. Replacement vectors are drawn from
/// `rng` and, when `basis` is given, orthogonalized against it frame-wise
/// (two passes); if nothing survives the frame is left at zero.
SpectralNormalized normalize_spectral(const SpectralTensor& x, double zero_tol,
                                      Rng& rng,
                                      const SpectralTensor* basis = nullptr);

/// Number of singular tubes with norm above tol * sigma_1. A negative tol
/// selects max(rows, cols) * eps.
Index tubal_rank(const Tensor3& a, double tol = -1.0);

}  // namespace tlbr
