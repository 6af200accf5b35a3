#include "tlbr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <mutex>
#include <string>

#include <fftw3.h>

#include "tlbr/error.hpp"
#include "tlbr/parallel.hpp"

namespace tlbr {

namespace {

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

std::string shape_str(Index a, Index b, Index c) {
  return std::to_string(a) + "x" + std::to_string(b) + "x" + std::to_string(c);
}

void require_same(const Tensor3& a, const Tensor3& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimMismatch(std::string(op) + ": shapes " +
                      shape_str(a.rows(), a.cols(), a.tubes()) + " and " +
                      shape_str(b.rows(), b.cols(), b.tubes()));
  }
}

void require_same(const SpectralTensor& a, const SpectralTensor& b,
                  const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.tubes() != b.tubes()) {
    throw DimMismatch(std::string(op) + ": shapes " +
                      shape_str(a.rows(), a.cols(), a.tubes()) + " and " +
                      shape_str(b.rows(), b.cols(), b.tubes()));
  }
}

}  // namespace

// ---------------------------------------------------------------- Tensor3

Tensor3::Tensor3(Index rows, Index cols, Index tubes)
    : rows_(rows), cols_(cols), tubes_(tubes), data_(rows * cols * tubes, 0.0) {
  if (rows == 0 || cols == 0 || tubes == 0) {
    throw InvalidArgument("tensor dimensions must be positive, got " +
                          shape_str(rows, cols, tubes));
  }
}

Tensor3::Tensor3(Index rows, Index cols, Index tubes, std::vector<double> data)
    : rows_(rows), cols_(cols), tubes_(tubes), data_(std::move(data)) {
  if (rows == 0 || cols == 0 || tubes == 0) {
    throw InvalidArgument("tensor dimensions must be positive, got " +
                          shape_str(rows, cols, tubes));
  }
  if (data_.size() != rows * cols * tubes) {
    throw DimMismatch("tensor data length " + std::to_string(data_.size()) +
                      " does not match " + shape_str(rows, cols, tubes));
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw InvalidArgument("tensor has non-finite entry");
  }
}

Eigen::Map<Eigen::MatrixXd> Tensor3::frontal(Index k) {
  if (k >= tubes_) throw IndexOutOfRange("frontal slice index");
  return {data_.data() + rows_ * cols_ * k, static_cast<Eigen::Index>(rows_),
          static_cast<Eigen::Index>(cols_)};
}

Eigen::Map<const Eigen::MatrixXd> Tensor3::frontal(Index k) const {
  if (k >= tubes_) throw IndexOutOfRange("frontal slice index");
  return {data_.data() + rows_ * cols_ * k, static_cast<Eigen::Index>(rows_),
          static_cast<Eigen::Index>(cols_)};
}

Tensor3 Tensor3::lateral(Index j) const { return laterals(j, 1); }

Tensor3 Tensor3::laterals(Index first, Index count) const {
  if (count == 0 || first + count > cols_) {
    throw IndexOutOfRange("lateral slices [" + std::to_string(first) + ", " +
                          std::to_string(first + count) + ") of " +
                          std::to_string(cols_));
  }
  Tensor3 out(rows_, count, tubes_);
  for (Index k = 0; k < tubes_; ++k) {
    std::memcpy(&out(0, 0, k), data_.data() + rows_ * (first + cols_ * k),
                sizeof(double) * rows_ * count);
  }
  return out;
}

void Tensor3::set_lateral(Index j, const Tensor3& slice) {
  if (j >= cols_) throw IndexOutOfRange("lateral slice index");
  if (slice.rows_ != rows_ || slice.cols_ != 1 || slice.tubes_ != tubes_) {
    throw DimMismatch("set_lateral: slice shape " +
                      shape_str(slice.rows_, slice.cols_, slice.tubes_));
  }
  for (Index k = 0; k < tubes_; ++k) {
    std::memcpy(&(*this)(0, j, k), slice.data_.data() + rows_ * k,
                sizeof(double) * rows_);
  }
}

Tensor3 Tensor3::tube(Index i, Index j) const {
  if (i >= rows_ || j >= cols_) throw IndexOutOfRange("tube index");
  Tensor3 out(1, 1, tubes_);
  for (Index k = 0; k < tubes_; ++k) out(0, 0, k) = (*this)(i, j, k);
  return out;
}

Tensor3& Tensor3::operator+=(const Tensor3& other) {
  require_same(*this, other, "add");
  for (Index t = 0; t < data_.size(); ++t) data_[t] += other.data_[t];
  return *this;
}

Tensor3& Tensor3::operator-=(const Tensor3& other) {
  require_same(*this, other, "subtract");
  for (Index t = 0; t < data_.size(); ++t) data_[t] -= other.data_[t];
  return *this;
}

Tensor3& Tensor3::operator*=(double scale) {
  for (double& v : data_) v *= scale;
  return *this;
}

Tensor3 concat_laterals(std::span<const Tensor3> parts) {
  if (parts.empty()) throw InvalidArgument("concat_laterals: no parts");
  const Index rows = parts[0].rows();
  const Index tubes = parts[0].tubes();
  Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows || p.tubes() != tubes) {
      throw DimMismatch("concat_laterals: mismatched rows or tubes");
    }
    cols += p.cols();
  }
  Tensor3 out(rows, cols, tubes);
  Index at = 0;
  for (const auto& p : parts) {
    for (Index k = 0; k < tubes; ++k) {
      std::memcpy(&out(0, at, k), p.data().data() + p.rows() * p.cols() * k,
                  sizeof(double) * rows * p.cols());
    }
    at += p.cols();
  }
  return out;
}

// --------------------------------------------------------- SpectralTensor

SpectralTensor::SpectralTensor(Index rows, Index cols, Index tubes)
    : rows_(rows), cols_(cols), tubes_(tubes) {
  if (rows == 0 || cols == 0 || tubes == 0) {
    throw InvalidArgument("tensor dimensions must be positive, got " +
                          shape_str(rows, cols, tubes));
  }
  frames_.assign(frame_count_for(tubes),
                 ComplexMatrix::Zero(static_cast<Eigen::Index>(rows),
                                     static_cast<Eigen::Index>(cols)));
}

double SpectralTensor::frame_weight(Index s) const noexcept {
  return real_frame(s) ? 1.0 : 2.0;
}

bool SpectralTensor::real_frame(Index s) const noexcept {
  return s == 0 || (tubes_ % 2 == 0 && s == tubes_ / 2);
}

SpectralTensor SpectralTensor::lateral(Index j) const { return laterals(j, 1); }

SpectralTensor SpectralTensor::laterals(Index first, Index count) const {
  if (count == 0 || first + count > cols_) {
    throw IndexOutOfRange("spectral lateral slices out of range");
  }
  SpectralTensor out;
  out.rows_ = rows_;
  out.cols_ = count;
  out.tubes_ = tubes_;
  out.frames_.reserve(frames_.size());
  for (const auto& f : frames_) {
    out.frames_.push_back(f.middleCols(static_cast<Eigen::Index>(first),
                                       static_cast<Eigen::Index>(count)));
  }
  return out;
}

void SpectralTensor::set_lateral(Index j, const SpectralTensor& slice) {
  if (j >= cols_) throw IndexOutOfRange("spectral lateral slice index");
  if (slice.rows_ != rows_ || slice.cols_ != 1 || slice.tubes_ != tubes_) {
    throw DimMismatch("spectral set_lateral: slice shape mismatch");
  }
  for (Index s = 0; s < frames_.size(); ++s) {
    frames_[s].col(static_cast<Eigen::Index>(j)) = slice.frames_[s].col(0);
  }
}

void SpectralTensor::append_laterals(const SpectralTensor& slices) {
  if (frames_.empty()) {
    *this = slices;
    return;
  }
  if (slices.rows_ != rows_ || slices.tubes_ != tubes_) {
    throw DimMismatch("append_laterals: mismatched rows or tubes");
  }
  for (Index s = 0; s < frames_.size(); ++s) {
    ComplexMatrix grown(frames_[s].rows(), frames_[s].cols() + slices.frames_[s].cols());
    grown << frames_[s], slices.frames_[s];
    frames_[s] = std::move(grown);
  }
  cols_ += slices.cols_;
}

SpectralTensor SpectralTensor::block(Index rows, Index cols) const {
  if (rows == 0 || cols == 0 || rows > rows_ || cols > cols_) {
    throw IndexOutOfRange("spectral block out of range");
  }
  SpectralTensor out;
  out.rows_ = rows;
  out.cols_ = cols;
  out.tubes_ = tubes_;
  out.frames_.reserve(frames_.size());
  for (const auto& f : frames_) {
    out.frames_.push_back(f.topLeftCorner(static_cast<Eigen::Index>(rows),
                                          static_cast<Eigen::Index>(cols)));
  }
  return out;
}

SpectralTensor& SpectralTensor::operator+=(const SpectralTensor& other) {
  require_same(*this, other, "spectral add");
  for (Index s = 0; s < frames_.size(); ++s) frames_[s] += other.frames_[s];
  return *this;
}

SpectralTensor& SpectralTensor::operator-=(const SpectralTensor& other) {
  require_same(*this, other, "spectral subtract");
  for (Index s = 0; s < frames_.size(); ++s) frames_[s] -= other.frames_[s];
  return *this;
}

double SpectralTensor::real_frame_residue() const {
  double worst = 0.0;
  for (Index s = 0; s < frames_.size(); ++s) {
    if (!real_frame(s)) continue;
    worst = std::max(worst, frames_[s].imag().cwiseAbs().maxCoeff());
  }
  return worst;
}

// --------------------------------------------------------------- FFT pair

SpectralTensor fft3(const Tensor3& a) {
  const Index rows = a.rows(), cols = a.cols(), n = a.tubes();
  SpectralTensor out(rows, cols, n);
  const Index h = out.frame_count();
  const Index lp = rows * cols;

  if (n == 1) {
    out.frame(0) = a.frontal(0).cast<Complex>();
    return out;
  }

  double* in = fftw_alloc_real(lp * n);
  fftw_complex* spec = fftw_alloc_complex(lp * h);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    const int len = static_cast<int>(n);
    plan = fftw_plan_many_dft_r2c(1, &len, static_cast<int>(lp), in, nullptr,
                                  static_cast<int>(lp), 1, spec, nullptr,
                                  static_cast<int>(lp), 1, FFTW_ESTIMATE);
  }
  std::memcpy(in, a.data().data(), sizeof(double) * lp * n);
  fftw_execute(plan);
  for (Index s = 0; s < h; ++s) {
    auto& f = out.frame(s);
    const fftw_complex* src = spec + s * lp;
    for (Index t = 0; t < lp; ++t) {
      f.data()[t] = Complex(src[t][0], src[t][1]);
    }
  }
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(spec);
  return out;
}

Tensor3 ifft3(const SpectralTensor& s) {
  const Index rows = s.rows(), cols = s.cols(), n = s.tubes();
  const Index h = s.frame_count();
  const Index lp = rows * cols;

  const double residue = s.real_frame_residue();
  if (residue > 0.0) {
    const double scale = std::max(fnorm(s) * std::sqrt(static_cast<double>(n)),
                                  std::numeric_limits<double>::min());
    if (residue > 1e-10 * scale) {
      throw SymmetryViolation("imaginary part " + std::to_string(residue) +
                              " in a frame that must be real");
    }
  }

  Tensor3 out(rows, cols, n);
  if (n == 1) {
    out.frontal(0) = s.frame(0).real();
    return out;
  }

  fftw_complex* spec = fftw_alloc_complex(lp * h);
  double* real = fftw_alloc_real(lp * n);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    const int len = static_cast<int>(n);
    plan = fftw_plan_many_dft_c2r(1, &len, static_cast<int>(lp), spec, nullptr,
                                  static_cast<int>(lp), 1, real, nullptr,
                                  static_cast<int>(lp), 1, FFTW_ESTIMATE);
  }
  for (Index f = 0; f < h; ++f) {
    const auto& m = s.frame(f);
    fftw_complex* dst = spec + f * lp;
    const bool must_be_real = s.real_frame(f);
    for (Index t = 0; t < lp; ++t) {
      dst[t][0] = m.data()[t].real();
      dst[t][1] = must_be_real ? 0.0 : m.data()[t].imag();
    }
  }
  fftw_execute(plan);
  const double inv = 1.0 / static_cast<double>(n);
  auto data = out.data();
  for (Index t = 0; t < lp * n; ++t) data[t] = real[t] * inv;
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(spec);
  fftw_free(real);
  return out;
}

// ----------------------------------------------------------- t-products

SpectralTensor tprod(const SpectralTensor& a, const SpectralTensor& b) {
  if (a.cols() != b.rows() || a.tubes() != b.tubes()) {
    throw DimMismatch("tprod: " + shape_str(a.rows(), a.cols(), a.tubes()) +
                      " times " + shape_str(b.rows(), b.cols(), b.tubes()));
  }
  SpectralTensor out(a.rows(), b.cols(), a.tubes());
  const double work = static_cast<double>(a.rows() * a.cols() * b.cols());
  parallel_for(out.frame_count(), work, [&](Index s) {
    out.frame(s).noalias() = a.frame(s) * b.frame(s);
  });
  return out;
}

SpectralTensor tprod_adjoint(const SpectralTensor& a, const SpectralTensor& b) {
  if (a.rows() != b.rows() || a.tubes() != b.tubes()) {
    throw DimMismatch("tprod_adjoint: " +
                      shape_str(a.rows(), a.cols(), a.tubes()) + "^H times " +
                      shape_str(b.rows(), b.cols(), b.tubes()));
  }
  SpectralTensor out(a.cols(), b.cols(), a.tubes());
  const double work = static_cast<double>(a.rows() * a.cols() * b.cols());
  parallel_for(out.frame_count(), work, [&](Index s) {
    out.frame(s).noalias() = a.frame(s).adjoint() * b.frame(s);
  });
  return out;
}

Tensor3 tprod(const Tensor3& a, const Tensor3& b) {
  if (a.cols() != b.rows() || a.tubes() != b.tubes()) {
    throw DimMismatch("tprod: " + shape_str(a.rows(), a.cols(), a.tubes()) +
                      " times " + shape_str(b.rows(), b.cols(), b.tubes()));
  }
  return ifft3(tprod(fft3(a), fft3(b)));
}

Tensor3 ttranspose(const Tensor3& a) {
  const Index n = a.tubes();
  Tensor3 out(a.cols(), a.rows(), n);
  out.frontal(0) = a.frontal(0).transpose();
  for (Index k = 1; k < n; ++k) out.frontal(k) = a.frontal(n - k).transpose();
  return out;
}

SpectralTensor ttranspose(const SpectralTensor& a) {
  SpectralTensor out(a.cols(), a.rows(), a.tubes());
  for (Index s = 0; s < a.frame_count(); ++s) out.frame(s) = a.frame(s).adjoint();
  return out;
}

double fnorm(const Tensor3& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v * v;
  return std::sqrt(acc);
}

double fnorm(const SpectralTensor& a) {
  double acc = 0.0;
  for (Index s = 0; s < a.frame_count(); ++s) {
    acc += a.frame_weight(s) * a.frame(s).squaredNorm();
  }
  return std::sqrt(acc / static_cast<double>(a.tubes()));
}

double inner(const Tensor3& a, const Tensor3& b) {
  require_same(a, b, "inner");
  double acc = 0.0;
  const auto x = a.data();
  const auto y = b.data();
  for (Index t = 0; t < x.size(); ++t) acc += x[t] * y[t];
  return acc;
}

Tube slice_dot(const LateralSlice& x, const LateralSlice& y) {
  if (x.cols() != 1 || y.cols() != 1 || x.rows() != y.rows() ||
      x.tubes() != y.tubes()) {
    throw DimMismatch("slice_dot: operands must be matching lateral slices");
  }
  return ifft3(tprod_adjoint(fft3(x), fft3(y)));
}

SpectralTensor scale_by_tube(const SpectralTensor& t, const SpectralTensor& tube) {
  if (tube.rows() != 1 || tube.cols() != 1 || tube.tubes() != t.tubes()) {
    throw DimMismatch("scale_by_tube: second operand must be a matching tube");
  }
  SpectralTensor out = t;
  for (Index s = 0; s < out.frame_count(); ++s) out.frame(s) *= tube.frame(s)(0, 0);
  return out;
}

Tensor3 identity_tensor(Index size, Index tubes) {
  Tensor3 out(size, size, tubes);
  for (Index i = 0; i < size; ++i) out(i, i, 0) = 1.0;
  return out;
}

SpectralTensor spectral_identity(Index size, Index tubes) {
  SpectralTensor out(size, size, tubes);
  for (Index s = 0; s < out.frame_count(); ++s) out.frame(s).setIdentity();
  return out;
}

LateralSlice canonical_slice(Index size, Index j, Index tubes) {
  if (j < 1 || j > size) {
    throw IndexOutOfRange("canonical_slice: index " + std::to_string(j) +
                          " outside 1.." + std::to_string(size));
  }
  LateralSlice out(size, 1, tubes);
  out(j - 1, 0, 0) = 1.0;
  return out;
}

}  // namespace tlbr
