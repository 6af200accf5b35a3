#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace tlbr {

using Index = std::size_t;
using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

///
/// Dense real third-order tensor of size rows x cols x tubes.
///
/// Storage is column-major within each frontal slice and frontal slices are
/// contiguous in the third index, so entry (i, j, k) lives at
/// `i + rows * (j + cols * k)`. A tensor with `rows x cols x 1` is a plain
/// matrix; `1 x 1 x n` is a tube and `rows x 1 x n` is a lateral slice.
///
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(Index rows, Index cols, Index tubes);
  /// Takes ownership of `data`; throws on wrong length or non-finite entries.
  Tensor3(Index rows, Index cols, Index tubes, std::vector<double> data);

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  Index tubes() const noexcept { return tubes_; }
  Index size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(Index i, Index j, Index k) {
    return data_[i + rows_ * (j + cols_ * k)];
  }
  double operator()(Index i, Index j, Index k) const {
    return data_[i + rows_ * (j + cols_ * k)];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Eigen::Map<Eigen::MatrixXd> frontal(Index k);
  Eigen::Map<const Eigen::MatrixXd> frontal(Index k) const;

  /// Lateral slice j as a rows x 1 x tubes tensor.
  Tensor3 lateral(Index j) const;
  /// Lateral slices [first, first + count).
  Tensor3 laterals(Index first, Index count) const;
  void set_lateral(Index j, const Tensor3& slice);
  /// Tube (i, j, :) as a 1 x 1 x tubes tensor.
  Tensor3 tube(Index i, Index j) const;

  Tensor3& operator+=(const Tensor3& other);
  Tensor3& operator-=(const Tensor3& other);
  Tensor3& operator*=(double scale);

  friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
  friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
  friend Tensor3 operator*(double s, Tensor3 a) { return a *= s; }

  bool same_shape(const Tensor3& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_ &&
           tubes_ == other.tubes_;
  }

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  Index tubes_ = 0;
  std::vector<double> data_;
};

using Tube = Tensor3;
using LateralSlice = Tensor3;

/// Concatenates tensors with matching rows and tubes along the lateral index.
Tensor3 concat_laterals(std::span<const Tensor3> parts);

///
/// Fourier-domain representation of a real tensor: the DFT of every tube,
/// keeping only frames 0 .. tubes/2. The remaining frames are the complex
/// conjugates of these and are never stored. Frame 0, and frame tubes/2 for
/// even `tubes`, carry real data.
///
class SpectralTensor {
 public:
  SpectralTensor() = default;
  SpectralTensor(Index rows, Index cols, Index tubes);

  static Index frame_count_for(Index tubes) noexcept { return tubes / 2 + 1; }

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  Index tubes() const noexcept { return tubes_; }
  Index frame_count() const noexcept { return frames_.size(); }

  ComplexMatrix& frame(Index s) { return frames_[s]; }
  const ComplexMatrix& frame(Index s) const { return frames_[s]; }

  /// Multiplicity of frame s in the full spectrum (1 or 2).
  double frame_weight(Index s) const noexcept;
  /// True for frames that must hold real values (DC and Nyquist).
  bool real_frame(Index s) const noexcept;

  SpectralTensor lateral(Index j) const;
  SpectralTensor laterals(Index first, Index count) const;
  void set_lateral(Index j, const SpectralTensor& slice);
  void append_laterals(const SpectralTensor& slices);
  /// Keeps the leading rows x cols block of every frame.
  SpectralTensor block(Index rows, Index cols) const;

  SpectralTensor& operator+=(const SpectralTensor& other);
  SpectralTensor& operator-=(const SpectralTensor& other);
  friend SpectralTensor operator+(SpectralTensor a, const SpectralTensor& b) {
    return a += b;
  }
  friend SpectralTensor operator-(SpectralTensor a, const SpectralTensor& b) {
    return a -= b;
  }

  /// Largest imaginary magnitude found in frames that must be real.
  double real_frame_residue() const;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  Index tubes_ = 0;
  std::vector<ComplexMatrix> frames_;
};

SpectralTensor fft3(const Tensor3& a);
/// Throws SymmetryViolation when a real frame carries an imaginary part above
/// 1e-10 relative to the tensor norm; smaller residues are discarded.
Tensor3 ifft3(const SpectralTensor& s);

/// t-product, computed frame-wise over the stored half spectrum.
Tensor3 tprod(const Tensor3& a, const Tensor3& b);
SpectralTensor tprod(const SpectralTensor& a, const SpectralTensor& b);
/// a^H * b without materializing the transpose.
SpectralTensor tprod_adjoint(const SpectralTensor& a, const SpectralTensor& b);

Tensor3 ttranspose(const Tensor3& a);
SpectralTensor ttranspose(const SpectralTensor& a);

double fnorm(const Tensor3& a);
double fnorm(const SpectralTensor& a);
double inner(const Tensor3& a, const Tensor3& b);

/// <x, y> = x^H * y, a tube.
Tube slice_dot(const LateralSlice& x, const LateralSlice& y);

/// Multiplies every frame of `t` by the matching (scalar) frame of a tube.
SpectralTensor scale_by_tube(const SpectralTensor& t, const SpectralTensor& tube);

Tensor3 identity_tensor(Index size, Index tubes);
SpectralTensor spectral_identity(Index size, Index tubes);
/// Canonical lateral slice: size x 1 x tubes with a single 1 in row j of the
/// first frontal slice. `j` is one-based; throws IndexOutOfRange otherwise.
LateralSlice canonical_slice(Index size, Index j, Index tubes);

}  // namespace tlbr
