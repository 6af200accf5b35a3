#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>

#include "tlbr/factorizations.hpp"
#include "tlbr/tensor.hpp"

namespace tlbr {

///
/// A linear map on lateral slices, X -> A * X and Y -> A^H * Y, given in the
/// Fourier domain. `rows` x `cols` x `tubes` is the shape of A.
///
struct TensorOperator {
  Index rows = 0;
  Index cols = 0;
  Index tubes = 0;
  std::function<SpectralTensor(const SpectralTensor&)> apply;
  std::function<SpectralTensor(const SpectralTensor&)> apply_adjoint;
};

/// Operator backed by a dense tensor (its spectrum is computed once).
TensorOperator dense_operator(const Tensor3& a);

/// Operator from spatial-domain callbacks.
TensorOperator callback_operator(Index rows, Index cols, Index tubes,
                                 std::function<Tensor3(const Tensor3&)> apply,
                                 std::function<Tensor3(const Tensor3&)> apply_adjoint);

///
/// Partial bidiagonalization state:
///   A * P = Q * B
///   A^H * Q = P * B^H + next_p * beta * E_m^H
/// with orthonormal P (cols x m), Q (rows x m), upper-triangular core B and
/// P^H * next_p = 0. Fresh runs give an upper bidiagonal B; after a restart
/// the leading block carries the augmented arrowhead.
///
struct BidiagDecomp {
  SpectralTensor P;
  SpectralTensor Q;
  SpectralTensor B;
  SpectralTensor next_p;
  SpectralTensor beta;  // 1 x 1
  Index m = 0;
  /// The residual vanished at step m: the columns span an invariant pair.
  bool breakdown = false;
  Index operator_applications = 0;

  double scale = 0.0;           // running max of |alpha|, |beta| frames
  std::uint64_t seed = 0;       // for replacement directions
  std::uint64_t draws = 0;

  Index tubes() const { return B.tubes(); }
  Tensor3 P_tensor() const { return ifft3(P); }
  Tensor3 Q_tensor() const { return ifft3(Q); }
  Tensor3 B_tensor() const { return ifft3(B); }
  Tube alpha(Index i) const;
  /// Superdiagonal entry (i, i + 1), zero-based.
  Tube superdiag(Index i) const;
  /// next_p * beta.
  LateralSlice residual() const;
  /// [B, beta * E_m], m x (m + 1).
  SpectralTensor B_extended() const;
};

struct LanczosOptions {
  bool reorthogonalize = true;
  std::uint64_t seed = 0;
  /// A vanishing residual before this many steps is replaced by a random
  /// direction instead of ending the run.
  Index min_steps = 0;
};

/// Normalized all-ones slice, or a seeded standard-normal one.
SpectralTensor default_start(Index size, Index tubes,
                             std::optional<std::uint64_t> seed = std::nullopt);

/// m steps starting from unit-norm p1; throws InvalidArgument when p1 is not
/// unit norm or m > min(rows, cols).
BidiagDecomp lanczos_bidiag(const TensorOperator& a, const SpectralTensor& p1,
                            Index m, const LanczosOptions& opts = {});
BidiagDecomp lanczos_bidiag(const TensorOperator& a, const LateralSlice& p1,
                            Index m, const LanczosOptions& opts = {});

/// Grows d to target_m columns; the existing columns and core entries are
/// left unchanged.
void extend_bidiag(const TensorOperator& a, BidiagDecomp& d, Index target_m,
                   const LanczosOptions& opts = {});

/// Two-pass classical Gram-Schmidt of w against basis, frame-wise. Returns the
/// accumulated coefficients basis^H * w (cols x 1).
SpectralTensor reorthogonalize(SpectralTensor& w, const SpectralTensor& basis);

/// Largest frame magnitude of a tube.
double tube_max(const SpectralTensor& tube);

}  // namespace tlbr
