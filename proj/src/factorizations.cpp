#include "tlbr/factorizations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tlbr/error.hpp"
#include "tlbr/parallel.hpp"

namespace tlbr {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double frame_work(Index rows, Index cols) {
  const double r = static_cast<double>(rows);
  const double c = static_cast<double>(cols);
  return r * c * std::min(r, c);
}

Eigen::VectorXcd random_frame(Index rows, bool real, Rng& rng) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(rows));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double re = rng.normal();
    const double im = real ? 0.0 : rng.normal();
    v(i) = Complex(re, im);
  }
  return v;
}

}  // namespace

SpectralTensor SpectralSVD::S(Index rows, Index cols) const {
  SpectralTensor out(rows, cols, U.tubes());
  for (Index s = 0; s < out.frame_count(); ++s) {
    const auto& sig = sigma[s];
    for (Eigen::Index i = 0; i < sig.size(); ++i) out.frame(s)(i, i) = sig(i);
  }
  return out;
}

Tube SpectralSVD::tube(Index i) const {
  if (i >= rank()) throw IndexOutOfRange("singular tube index");
  SpectralTensor t(1, 1, U.tubes());
  for (Index s = 0; s < t.frame_count(); ++s) {
    t.frame(s)(0, 0) = sigma[s](static_cast<Eigen::Index>(i));
  }
  return ifft3(t);
}

SpectralSVD t_svd_spectral(const SpectralTensor& a, bool economy) {
  const Index rows = a.rows(), cols = a.cols(), n = a.tubes();
  const Index r = std::min(rows, cols);
  SpectralSVD out;
  out.U = SpectralTensor(rows, economy ? r : rows, n);
  out.V = SpectralTensor(cols, economy ? r : cols, n);
  out.sigma.assign(a.frame_count(), Eigen::VectorXd());
  parallel_for(a.frame_count(), frame_work(rows, cols), [&](Index s) {
    FrameSVD f = frame_svd(a.frame(s), economy);
    out.U.frame(s) = std::move(f.U);
    out.V.frame(s) = std::move(f.V);
    out.sigma[s] = std::move(f.S);
  });
  return out;
}

double TSVD::sigma(Index i) const { return fnorm(tube(i)); }

TSVD t_svd(const Tensor3& a, bool economy) {
  const SpectralSVD sp = t_svd_spectral(fft3(a), economy);
  const Index r = std::min(a.rows(), a.cols());
  TSVD out;
  out.U = ifft3(sp.U);
  out.V = ifft3(sp.V);
  out.S = economy ? ifft3(sp.S(r, r)) : ifft3(sp.S(a.rows(), a.cols()));
  return out;
}

TSVD truncated_tsvd(const Tensor3& a, Index k) {
  const Index r = std::min(a.rows(), a.cols());
  if (k < 1 || k > r) {
    throw IndexOutOfRange("truncated_tsvd: k=" + std::to_string(k) +
                          " outside 1.." + std::to_string(r));
  }
  TSVD full = t_svd(a, true);
  TSVD out;
  out.U = full.U.laterals(0, k);
  out.V = full.V.laterals(0, k);
  out.S = Tensor3(k, k, a.tubes());
  for (Index i = 0; i < k; ++i) {
    for (Index t = 0; t < a.tubes(); ++t) out.S(i, i, t) = full.S(i, i, t);
  }
  return out;
}

Tensor3 reconstruct(const TSVD& t) {
  const SpectralTensor us = tprod(fft3(t.U), fft3(t.S));
  return ifft3(tprod(us, ttranspose(fft3(t.V))));
}

TQR t_qr(const Tensor3& a, bool economy) {
  const SpectralTensor sa = fft3(a);
  const Index rows = a.rows(), cols = a.cols(), n = a.tubes();
  if (economy && rows < cols) {
    throw DimMismatch("t_qr: economy mode needs rows >= cols");
  }
  SpectralTensor q(rows, economy ? cols : rows, n);
  SpectralTensor r(economy ? cols : rows, cols, n);
  parallel_for(sa.frame_count(), frame_work(rows, cols), [&](Index s) {
    FrameQR f = frame_qr(sa.frame(s), economy);
    q.frame(s) = std::move(f.Q);
    r.frame(s) = std::move(f.R);
  });
  return TQR{ifft3(q), ifft3(r)};
}

SpectralNormalized normalize_spectral(const SpectralTensor& x, double zero_tol,
                                      Rng& rng, const SpectralTensor* basis) {
  if (x.cols() != 1) throw DimMismatch("normalize: input must be a lateral slice");
  if (basis != nullptr &&
      (basis->rows() != x.rows() || basis->tubes() != x.tubes())) {
    throw DimMismatch("normalize: basis shape does not match slice");
  }
  SpectralNormalized out;
  out.y = x;
  out.a = SpectralTensor(1, 1, x.tubes());
  out.degenerate.assign(x.frame_count(), false);
  Index degenerate = 0;
  for (Index s = 0; s < x.frame_count(); ++s) {
    const double nrm = x.frame(s).norm();
    if (nrm > zero_tol && nrm > 0.0) {
      out.y.frame(s) /= nrm;
      out.a.frame(s)(0, 0) = nrm;
      continue;
    }
    out.degenerate[s] = true;
    ++degenerate;
    Eigen::VectorXcd v = random_frame(x.rows(), x.real_frame(s), rng);
    const double start = v.norm();
    if (basis != nullptr && basis->cols() > 0) {
      const ComplexMatrix& b = basis->frame(s);
      for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXcd coef = b.adjoint() * v;
        v.noalias() -= b * coef;
      }
    }
    const double left = v.norm();
    if (left <= 1e-8 * start) {
      out.y.frame(s).setZero();
    } else {
      out.y.frame(s) = v / left;
    }
    out.a.frame(s)(0, 0) = 0.0;
  }
  out.zero_slice = degenerate == x.frame_count();
  return out;
}

Normalized normalize_slice(const LateralSlice& x, std::uint64_t seed) {
  if (x.cols() != 1) throw DimMismatch("normalize_slice: input must be a lateral slice");
  const SpectralTensor sx = fft3(x);
  double top = 0.0;
  for (Index s = 0; s < sx.frame_count(); ++s) top = std::max(top, sx.frame(s).norm());
  Rng rng(seed);
  const double tol = static_cast<double>(x.rows()) * kEps * top;
  SpectralNormalized sn = normalize_spectral(sx, tol, rng);
  return Normalized{ifft3(sn.y), ifft3(sn.a), sn.zero_slice};
}

Index tubal_rank(const Tensor3& a, double tol) {
  if (tol < 0.0) tol = static_cast<double>(std::max(a.rows(), a.cols())) * kEps;
  const SpectralSVD sp = t_svd_spectral(fft3(a), true);
  const Index r = sp.rank();
  const double n = static_cast<double>(a.tubes());
  std::vector<double> norms(r, 0.0);
  for (Index i = 0; i < r; ++i) {
    double acc = 0.0;
    for (Index s = 0; s < sp.sigma.size(); ++s) {
      const double v = sp.sigma[s](static_cast<Eigen::Index>(i));
      acc += sp.U.frame_weight(s) * v * v;
    }
    norms[i] = std::sqrt(acc / n);
  }
  if (r == 0 || norms[0] == 0.0) return 0;
  Index count = 0;
  for (double v : norms) {
    if (v > tol * norms[0]) ++count;
  }
  return count;
}

}  // namespace tlbr
