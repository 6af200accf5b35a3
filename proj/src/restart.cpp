#include "tlbr/restart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "tlbr/error.hpp"
#include "tlbr/random.hpp"

namespace tlbr {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kRelationTol = 1e-8;

ComplexMatrix select_cols(const ComplexMatrix& m, const std::vector<Index>& sel) {
  ComplexMatrix out(m.rows(), static_cast<Eigen::Index>(sel.size()));
  for (std::size_t i = 0; i < sel.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) = m.col(static_cast<Eigen::Index>(sel[i]));
  }
  return out;
}

double max_frame_norm(const SpectralTensor& x) {
  double top = 0.0;
  for (Index s = 0; s < x.frame_count(); ++s) top = std::max(top, x.frame(s).norm());
  return top;
}

double zero_factor(const TensorOperator& a) {
  return static_cast<double>(std::max(a.rows, a.cols)) * kEps;
}

SpectralTensor conj_tube(const SpectralTensor& t) {
  SpectralTensor out = t;
  for (Index s = 0; s < out.frame_count(); ++s) out.frame(s) = out.frame(s).conjugate();
  return out;
}

// Orthogonalizes `f` against `basis` and splits it into a unit slice and a
// tube; fills next_p, beta and the breakdown flag of `out`.
void close_residual(const TensorOperator& a, SpectralTensor f, BidiagDecomp& out) {
  reorthogonalize(f, out.P);
  const double tol = zero_factor(a) * std::max(out.scale, max_frame_norm(f));
  Rng rng(mix_seed(out.seed, out.draws++));
  SpectralNormalized nf = normalize_spectral(f, tol, rng, &out.P);
  out.next_p = std::move(nf.y);
  out.beta = std::move(nf.a);
  out.scale = std::max(out.scale, tube_max(out.beta));
  out.breakdown = nf.zero_slice;
}

double weighted_mean(const SpectralTensor& like, const std::vector<double>& values) {
  double acc = 0.0;
  for (Index s = 0; s < values.size(); ++s) acc += like.frame_weight(s) * values[s];
  return acc / static_cast<double>(like.tubes());
}

}  // namespace

void SolverConfig::validate(Index rows, Index cols) const {
  const Index limit = std::min(rows, cols);
  if (k < 1 || k >= m || m > limit) {
    throw InvalidArgument("need 1 <= k < m <= " + std::to_string(limit) + ", got k=" +
                          std::to_string(k) + " m=" + std::to_string(m));
  }
  if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidArgument("delta must be positive");
  if (max_restarts < 1) throw InvalidArgument("max_restarts must be at least 1");
  if (!(kappa_threshold > 0.0)) throw InvalidArgument("kappa_threshold must be positive");
}

Tensor3 TripletSet::S() const {
  const Index k = s.size();
  if (k == 0) throw InvalidArgument("empty triplet set");
  Tensor3 out(k, k, s[0].tubes());
  for (Index i = 0; i < k; ++i) {
    for (Index t = 0; t < out.tubes(); ++t) out(i, i, t) = s[i](0, 0, t);
  }
  return out;
}

void ConvergenceHistory::write_csv(std::ostream& out) const {
  out << "restart,triplet_index,residual_bound,sigma_estimate\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g\n", r.restart, r.triplet_index,
                  r.residual_bound, r.sigma_estimate);
    out << buf;
  }
}

TSVD small_svd_of_core(const Tensor3& b) { return t_svd(b, true); }

std::vector<Index> tracked_indices(Index m, Index k, Mode mode) {
  if (k < 1 || k > m) throw IndexOutOfRange("tracked triplet count");
  std::vector<Index> sel(k);
  for (Index i = 0; i < k; ++i) sel[i] = mode == Mode::Largest ? i : m - 1 - i;
  return sel;
}

ConvergenceCheck check_convergence(const BidiagDecomp& d, const SpectralSVD& core,
                                   const std::vector<Index>& selected, double delta) {
  const Index h = d.B.frame_count();
  const auto last = static_cast<Eigen::Index>(d.m - 1);
  ConvergenceCheck out;
  std::vector<double> lead(h);
  for (Index s = 0; s < h; ++s) lead[s] = core.sigma[s](0);
  out.threshold = delta * weighted_mean(d.B, lead);
  for (Index i : selected) {
    std::vector<double> terms(h);
    for (Index s = 0; s < h; ++s) {
      const double b = std::abs(d.beta.frame(s)(0, 0));
      const double u = std::abs(core.U.frame(s)(last, static_cast<Eigen::Index>(i)));
      terms[s] = b * b * u * u;
    }
    const double res = std::sqrt(weighted_mean(d.B, terms));
    out.residual.push_back(res);
    out.converged.push_back(res <= out.threshold);
  }
  return out;
}

ConvergenceCheck check_convergence(const BidiagDecomp& d, const SpectralSVD& core, Index k,
                                   double delta, Mode mode) {
  return check_convergence(d, core, tracked_indices(d.m, k, mode), delta);
}

AugmentedState ritz_augment(const TensorOperator& a, const BidiagDecomp& d,
                            const SpectralSVD& core, Index k, Mode mode) {
  if (d.breakdown) throw InvalidArgument("ritz_augment: decomposition has broken down");
  if (k < 1 || k >= d.m) throw InvalidArgument("ritz_augment: need 1 <= k < m");
  const Index n = d.tubes();
  const std::vector<Index> sel = tracked_indices(d.m, k, mode);
  const auto last = static_cast<Eigen::Index>(d.m - 1);
  const auto kk = static_cast<Eigen::Index>(k);

  AugmentedState out;
  out.seed = d.seed;
  out.draws = d.draws;
  out.scale = d.scale;
  out.operator_applications = d.operator_applications;
  out.P = SpectralTensor(a.cols, k + 1, n);
  SpectralTensor qk(a.rows, k, n);
  SpectralTensor rho(k, 1, n);
  for (Index s = 0; s < d.B.frame_count(); ++s) {
    const ComplexMatrix vs = select_cols(core.V.frame(s), sel);
    const ComplexMatrix us = select_cols(core.U.frame(s), sel);
    out.P.frame(s).leftCols(kk) = d.P.frame(s) * vs;
    out.P.frame(s).col(kk) = d.next_p.frame(s).col(0);
    qk.frame(s) = d.Q.frame(s) * us;
    const Complex b = std::conj(d.beta.frame(s)(0, 0));
    for (Eigen::Index i = 0; i < kk; ++i) rho.frame(s)(i, 0) = b * std::conj(us(last, i));
  }

  SpectralTensor r = a.apply(d.next_p);
  ++out.operator_applications;
  r -= tprod(qk, rho);
  rho += reorthogonalize(r, qk);
  const double tol = zero_factor(a) * std::max(out.scale, max_frame_norm(r));
  Rng rng(mix_seed(out.seed, out.draws++));
  SpectralNormalized nr = normalize_spectral(r, tol, rng, &qk);
  out.scale = std::max(out.scale, tube_max(nr.a));

  out.Q = qk;
  out.Q.append_laterals(nr.y);
  out.B = SpectralTensor(k + 1, k + 1, n);
  for (Index s = 0; s < out.B.frame_count(); ++s) {
    auto& f = out.B.frame(s);
    for (Eigen::Index i = 0; i < kk; ++i) {
      f(i, i) = core.sigma[s](static_cast<Eigen::Index>(sel[static_cast<std::size_t>(i)]));
      f(i, kk) = rho.frame(s)(i, 0);
    }
    f(kk, kk) = nr.a.frame(s)(0, 0);
  }
  out.m = k + 1;

  SpectralTensor f = a.apply_adjoint(nr.y);
  ++out.operator_applications;
  f -= scale_by_tube(d.next_p, conj_tube(nr.a));
  close_residual(a, std::move(f), out);
  return out;
}

AugmentedState harmonic_augment(const TensorOperator& a, const BidiagDecomp& d, Index k) {
  if (d.breakdown) throw InvalidArgument("harmonic_augment: decomposition has broken down");
  if (k < 1 || k >= d.m) throw InvalidArgument("harmonic_augment: need 1 <= k < m");
  const Index n = d.tubes();
  const Index m = d.m;
  const auto mm = static_cast<Eigen::Index>(m);
  const auto kk = static_cast<Eigen::Index>(k);
  const Index h = d.B.frame_count();
  const SpectralTensor bext = d.B_extended();

  AugmentedState out;
  out.seed = d.seed;
  out.draws = d.draws;
  out.scale = d.scale;
  out.operator_applications = d.operator_applications;
  out.P = SpectralTensor(a.cols, k + 1, n);
  SpectralTensor qk(a.rows, k, n);
  std::vector<Eigen::VectorXd> small(h);
  std::vector<ComplexMatrix> rfac(h);

  for (Index s = 0; s < h; ++s) {
    const FrameSVD f = frame_svd(bext.frame(s), true);
    std::vector<Index> sel(k);
    for (Index i = 0; i < k; ++i) sel[i] = m - 1 - i;
    const ComplexMatrix uk = select_cols(f.U, sel);
    Eigen::VectorXd sk(kk);
    for (Eigen::Index i = 0; i < kk; ++i) sk(i) = f.S(static_cast<Eigen::Index>(sel[static_cast<std::size_t>(i)]));

    const ComplexMatrix& bm = d.B.frame(s);
    ComplexMatrix j = ComplexMatrix::Zero(mm + 1, kk + 1);
    j.topLeftCorner(mm, kk) = frame_tri_solve(bm, uk * sk.cast<Complex>().asDiagonal());
    ComplexMatrix em = ComplexMatrix::Zero(mm, 1);
    em(mm - 1, 0) = 1.0;
    j.block(0, kk, mm, 1) = -d.beta.frame(s)(0, 0) * frame_tri_solve(bm, em);
    j(mm, kk) = 1.0;
    FrameQR qr = frame_qr(j, true);

    ComplexMatrix pm1(d.P.rows(), mm + 1);
    pm1 << d.P.frame(s), d.next_p.frame(s);
    out.P.frame(s) = pm1 * qr.Q;
    qk.frame(s) = d.Q.frame(s) * uk;
    small[s] = std::move(sk);
    rfac[s] = std::move(qr.R);
  }

  SpectralTensor w = a.apply(d.next_p);
  ++out.operator_applications;
  w -= scale_by_tube(d.Q.lateral(m - 1), d.beta);
  const SpectralTensor gamma = reorthogonalize(w, qk);
  const double tol = zero_factor(a) * std::max(out.scale, max_frame_norm(w));
  Rng rng(mix_seed(out.seed, out.draws++));
  SpectralNormalized nw = normalize_spectral(w, tol, rng, &qk);
  out.scale = std::max(out.scale, tube_max(nw.a));

  out.Q = qk;
  out.Q.append_laterals(nw.y);
  out.B = SpectralTensor(k + 1, k + 1, n);
  SpectralTensor corner(1, 1, n);
  for (Index s = 0; s < h; ++s) {
    ComplexMatrix lead = ComplexMatrix::Zero(kk + 1, kk + 1);
    for (Eigen::Index i = 0; i < kk; ++i) {
      lead(i, i) = small[s](i);
      lead(i, kk) = gamma.frame(s)(i, 0);
    }
    lead(kk, kk) = nw.a.frame(s)(0, 0);
    const ComplexMatrix rinv = frame_tri_solve(rfac[s], ComplexMatrix::Identity(kk + 1, kk + 1));
    ComplexMatrix bf = lead * rinv;
    bf.triangularView<Eigen::StrictlyLower>().setZero();
    out.B.frame(s) = bf;
    corner.frame(s)(0, 0) = bf(kk, kk);
  }
  out.m = k + 1;

  SpectralTensor f = a.apply_adjoint(nw.y);
  ++out.operator_applications;
  f -= scale_by_tube(out.P.lateral(k), conj_tube(corner));
  close_residual(a, std::move(f), out);
  return out;
}

RelationResiduals relation_residuals(const TensorOperator& a, const BidiagDecomp& d) {
  RelationResiduals rr;
  const Index n = d.tubes();
  const double bnorm = std::max(fnorm(d.B), std::numeric_limits<double>::min());
  const SpectralTensor ap = a.apply(d.P);
  rr.forward = fnorm(ap - tprod(d.Q, d.B)) / bnorm;
  SpectralTensor rhs = tprod(d.P, ttranspose(d.B));
  const SpectralTensor tail = scale_by_tube(d.next_p, d.beta);
  for (Index s = 0; s < rhs.frame_count(); ++s) {
    rhs.frame(s).col(static_cast<Eigen::Index>(d.m - 1)) += tail.frame(s).col(0);
  }
  rr.adjoint = fnorm(a.apply_adjoint(d.Q) - rhs) / bnorm;
  rr.p_ortho = fnorm(tprod_adjoint(d.P, d.P) - spectral_identity(d.P.cols(), n));
  rr.q_ortho = fnorm(tprod_adjoint(d.Q, d.Q) - spectral_identity(d.Q.cols(), n));
  rr.residual_ortho = fnorm(tprod_adjoint(d.P, d.next_p));
  return rr;
}

double core_condition(const BidiagDecomp& d) {
  double worst = 0.0;
  for (Index s = 0; s < d.B.frame_count(); ++s) {
    worst = std::max(worst, frame_condition(d.B.frame(s)));
  }
  return worst;
}

namespace {

bool relations_hold(const RelationResiduals& rr) {
  return rr.forward <= kRelationTol && rr.adjoint <= kRelationTol &&
         rr.p_ortho <= kRelationTol && rr.q_ortho <= kRelationTol &&
         rr.residual_ortho <= kRelationTol;
}

double max_condition(const SpectralSVD& core) {
  double worst = 0.0;
  for (const auto& sig : core.sigma) {
    const double lo = sig(sig.size() - 1);
    worst = std::max(worst, lo > 0.0 ? sig(0) / lo : std::numeric_limits<double>::infinity());
  }
  return worst;
}

TripletSet extract_triplets(const BidiagDecomp& d, const SpectralSVD& core,
                            const std::vector<Index>& sel, const ConvergenceCheck& chk,
                            const std::vector<bool>& locked, Mode mode) {
  const Index n = d.tubes();
  const Index k = sel.size();
  SpectralTensor u(d.Q.rows(), k, n);
  SpectralTensor v(d.P.rows(), k, n);
  for (Index s = 0; s < d.B.frame_count(); ++s) {
    u.frame(s) = d.Q.frame(s) * select_cols(core.U.frame(s), sel);
    v.frame(s) = d.P.frame(s) * select_cols(core.V.frame(s), sel);
  }
  TripletSet t;
  t.U = ifft3(u);
  t.V = ifft3(v);
  t.mode = mode;
  for (Index i = 0; i < k; ++i) {
    Tube tube = core.tube(sel[i]);
    t.sigma.push_back(fnorm(tube));
    t.s.push_back(std::move(tube));
  }
  t.residual = chk.residual;
  t.converged = locked;
  return t;
}

}  // namespace

SolverResult tlbr_solve(const TensorOperator& a, const SolverConfig& cfg) {
  cfg.validate(a.rows, a.cols);
  LanczosOptions lo;
  lo.reorthogonalize = cfg.reorthogonalize;
  lo.seed = mix_seed(cfg.seed.value_or(0), 1);
  lo.min_steps = cfg.k;

  BidiagDecomp d = lanczos_bidiag(a, default_start(a.cols, a.tubes, cfg.seed), cfg.m, lo);
  SolverResult res;
  std::vector<bool> locked(cfg.k, false);
  Index extra_ops = 0;

  for (;;) {
    ++res.iterations;
    const SpectralSVD core = t_svd_spectral(d.B, true);
    const std::vector<Index> sel = tracked_indices(d.m, cfg.k, cfg.mode);
    const ConvergenceCheck chk = check_convergence(d, core, sel, cfg.delta);
    for (Index i = 0; i < cfg.k; ++i) {
      std::vector<double> sq(core.sigma.size());
      for (Index s = 0; s < sq.size(); ++s) {
        const double v = core.sigma[s](static_cast<Eigen::Index>(sel[i]));
        sq[s] = v * v;
      }
      const double sigma = std::sqrt(weighted_mean(d.B, sq));
      res.history.rows.push_back({res.iterations, i + 1, chk.residual[i], sigma});
      if (chk.converged[i]) locked[i] = true;
    }
    const bool done = d.breakdown || std::all_of(locked.begin(), locked.end(), [](bool b) { return b; });
    if (done || res.iterations >= cfg.max_restarts) {
      if (d.breakdown) std::fill(locked.begin(), locked.end(), true);
      res.converged = done;
      res.triplets = extract_triplets(d, core, sel, chk, locked, cfg.mode);
      break;
    }

    std::optional<AugmentedState> next;
    const bool want_harmonic = cfg.mode == Mode::Smallest &&
                               cfg.augmentation == Augmentation::Harmonic &&
                               max_condition(core) <= cfg.kappa_threshold;
    if (want_harmonic) {
      try {
        AugmentedState h = harmonic_augment(a, d, cfg.k);
        bool ok = true;
        if (cfg.verify_augmentation) {
          extra_ops += 2 * (cfg.k + 1);
          ok = relations_hold(relation_residuals(a, h));
        }
        if (ok) {
          next = std::move(h);
          ++res.harmonic_restarts;
        }
      } catch (const SingularFrame&) {
      } catch (const NoConvergence&) {
      }
      if (!next) ++res.ritz_fallbacks;
    }
    if (!next) {
      AugmentedState r = ritz_augment(a, d, core, cfg.k, cfg.mode);
      if (cfg.verify_augmentation) {
        extra_ops += 2 * (cfg.k + 1);
        const RelationResiduals rr = relation_residuals(a, r);
        if (!relations_hold(rr)) {
          throw InternalError("augmented relations violated: forward " +
                              std::to_string(rr.forward) + ", adjoint " +
                              std::to_string(rr.adjoint));
        }
      }
      next = std::move(r);
    }
    d = std::move(*next);
    if (!d.breakdown) extend_bidiag(a, d, cfg.m, lo);
  }
  res.operator_applications = d.operator_applications + extra_ops;
  return res;
}

SolverResult tlbr_solve(const Tensor3& a, const SolverConfig& cfg) {
  return tlbr_solve(dense_operator(a), cfg);
}

}  // namespace tlbr
