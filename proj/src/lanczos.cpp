#include "tlbr/lanczos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tlbr/error.hpp"
#include "tlbr/random.hpp"

namespace tlbr {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

SpectralTensor conj_tube(const SpectralTensor& t) {
  SpectralTensor out = t;
  for (Index s = 0; s < out.frame_count(); ++s) out.frame(s) = out.frame(s).conjugate();
  return out;
}

double max_frame_norm(const SpectralTensor& x) {
  double top = 0.0;
  for (Index s = 0; s < x.frame_count(); ++s) top = std::max(top, x.frame(s).norm());
  return top;
}

SpectralTensor grow_square(const SpectralTensor& b, Index size, Index tubes) {
  SpectralTensor out(size, size, tubes);
  if (b.frame_count() == 0) return out;
  const auto old = static_cast<Eigen::Index>(b.rows());
  for (Index s = 0; s < out.frame_count(); ++s) {
    out.frame(s).topLeftCorner(old, old) = b.frame(s);
  }
  return out;
}

bool unit_norm(const SpectralTensor& p) {
  for (Index s = 0; s < p.frame_count(); ++s) {
    if (std::abs(p.frame(s).norm() - 1.0) > 1e-10) return false;
  }
  return true;
}

}  // namespace

TensorOperator dense_operator(const Tensor3& a) {
  auto spec = std::make_shared<const SpectralTensor>(fft3(a));
  TensorOperator op;
  op.rows = a.rows();
  op.cols = a.cols();
  op.tubes = a.tubes();
  op.apply = [spec](const SpectralTensor& x) { return tprod(*spec, x); };
  op.apply_adjoint = [spec](const SpectralTensor& y) { return tprod_adjoint(*spec, y); };
  return op;
}

TensorOperator callback_operator(Index rows, Index cols, Index tubes,
                                 std::function<Tensor3(const Tensor3&)> apply,
                                 std::function<Tensor3(const Tensor3&)> apply_adjoint) {
  TensorOperator op;
  op.rows = rows;
  op.cols = cols;
  op.tubes = tubes;
  op.apply = [f = std::move(apply)](const SpectralTensor& x) { return fft3(f(ifft3(x))); };
  op.apply_adjoint = [f = std::move(apply_adjoint)](const SpectralTensor& y) {
    return fft3(f(ifft3(y)));
  };
  return op;
}

Tube BidiagDecomp::alpha(Index i) const {
  if (i >= m) throw IndexOutOfRange("alpha index");
  SpectralTensor t(1, 1, tubes());
  for (Index s = 0; s < t.frame_count(); ++s) t.frame(s)(0, 0) = B.frame(s)(i, i);
  return ifft3(t);
}

Tube BidiagDecomp::superdiag(Index i) const {
  if (i + 1 >= m) throw IndexOutOfRange("superdiagonal index");
  SpectralTensor t(1, 1, tubes());
  for (Index s = 0; s < t.frame_count(); ++s) t.frame(s)(0, 0) = B.frame(s)(i, i + 1);
  return ifft3(t);
}

LateralSlice BidiagDecomp::residual() const {
  return ifft3(scale_by_tube(next_p, beta));
}

SpectralTensor BidiagDecomp::B_extended() const {
  SpectralTensor out(m, m + 1, tubes());
  const auto mm = static_cast<Eigen::Index>(m);
  for (Index s = 0; s < out.frame_count(); ++s) {
    out.frame(s).leftCols(mm) = B.frame(s);
    out.frame(s)(mm - 1, mm) = beta.frame(s)(0, 0);
  }
  return out;
}

SpectralTensor reorthogonalize(SpectralTensor& w, const SpectralTensor& basis) {
  SpectralTensor coef(basis.cols(), w.cols(), w.tubes());
  for (Index s = 0; s < w.frame_count(); ++s) {
    const ComplexMatrix& b = basis.frame(s);
    ComplexMatrix& x = w.frame(s);
    for (int pass = 0; pass < 2; ++pass) {
      const ComplexMatrix c = b.adjoint() * x;
      x.noalias() -= b * c;
      coef.frame(s) += c;
    }
  }
  return coef;
}

double tube_max(const SpectralTensor& tube) {
  double top = 0.0;
  for (Index s = 0; s < tube.frame_count(); ++s) top = std::max(top, std::abs(tube.frame(s)(0, 0)));
  return top;
}

SpectralTensor default_start(Index size, Index tubes, std::optional<std::uint64_t> seed) {
  Tensor3 x(size, 1, tubes);
  if (seed) {
    x = randn_tensor(size, 1, tubes, *seed);
  } else {
    for (Index i = 0; i < size; ++i) {
      for (Index k = 0; k < tubes; ++k) x(i, 0, k) = 1.0;
    }
  }
  Rng rng(mix_seed(seed.value_or(0), 0xC0FFEE));
  const SpectralTensor sx = fft3(x);
  const double tol = static_cast<double>(size) * kEps * max_frame_norm(sx);
  return normalize_spectral(sx, tol, rng).y;
}

BidiagDecomp lanczos_bidiag(const TensorOperator& a, const LateralSlice& p1, Index m,
                            const LanczosOptions& opts) {
  return lanczos_bidiag(a, fft3(p1), m, opts);
}

BidiagDecomp lanczos_bidiag(const TensorOperator& a, const SpectralTensor& p1, Index m,
                            const LanczosOptions& opts) {
  if (p1.rows() != a.cols || p1.cols() != 1 || p1.tubes() != a.tubes) {
    throw DimMismatch("lanczos_bidiag: start slice shape does not match operator");
  }
  if (!unit_norm(p1)) throw InvalidArgument("lanczos_bidiag: start slice must have unit norm");
  BidiagDecomp d;
  d.next_p = p1;
  d.beta = SpectralTensor(1, 1, a.tubes);
  d.seed = opts.seed;
  extend_bidiag(a, d, m, opts);
  return d;
}

void extend_bidiag(const TensorOperator& a, BidiagDecomp& d, Index target_m,
                   const LanczosOptions& opts) {
  const Index limit = std::min(a.rows, a.cols);
  if (target_m == 0 || target_m > limit) {
    throw InvalidArgument("bidiagonalization length " + std::to_string(target_m) +
                          " outside 1.." + std::to_string(limit));
  }
  const Index n = a.tubes;
  const double zero_factor = static_cast<double>(std::max(a.rows, a.cols)) * kEps;

  while (d.m < target_m && !d.breakdown) {
    const Index j = d.m;

    SpectralTensor w = a.apply(d.next_p);
    ++d.operator_applications;
    if (j > 0) w -= scale_by_tube(d.Q.lateral(j - 1), d.beta);
    if (opts.reorthogonalize && j > 0) reorthogonalize(w, d.Q);
    {
      const double tol = zero_factor * std::max(d.scale, max_frame_norm(w));
      Rng rng(mix_seed(d.seed, d.draws++));
      SpectralNormalized nw = normalize_spectral(w, tol, rng, j > 0 ? &d.Q : nullptr);
      d.scale = std::max(d.scale, tube_max(nw.a));

      d.P.append_laterals(d.next_p);
      d.Q.append_laterals(nw.y);
      d.B = grow_square(d.B, j + 1, n);
      for (Index s = 0; s < d.B.frame_count(); ++s) {
        if (j > 0) d.B.frame(s)(j - 1, j) = d.beta.frame(s)(0, 0);
        d.B.frame(s)(j, j) = nw.a.frame(s)(0, 0);
      }
    }

    SpectralTensor r = a.apply_adjoint(d.Q.lateral(j));
    ++d.operator_applications;
    SpectralTensor alpha(1, 1, n);
    for (Index s = 0; s < alpha.frame_count(); ++s) alpha.frame(s)(0, 0) = d.B.frame(s)(j, j);
    r -= scale_by_tube(d.P.lateral(j), conj_tube(alpha));
    if (opts.reorthogonalize) reorthogonalize(r, d.P);

    const double tol = zero_factor * std::max(d.scale, max_frame_norm(r));
    Rng rng(mix_seed(d.seed, d.draws++));
    SpectralNormalized nr = normalize_spectral(r, tol, rng, &d.P);
    d.m = j + 1;
    d.next_p = std::move(nr.y);
    d.beta = std::move(nr.a);
    d.scale = std::max(d.scale, tube_max(d.beta));
    if (nr.zero_slice && d.m >= opts.min_steps) d.breakdown = true;
  }
}

}  // namespace tlbr
