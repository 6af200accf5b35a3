#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "tlbr/error.hpp"
#include "tlbr/restart.hpp"

using namespace tlbr;
using oracle::bcirc_oracle;
using oracle::random_tensor;
using oracle::rel_err;
using oracle::transpose_by_definition;

namespace {

Tensor3 mul(const Tensor3& a, const Tensor3& b) { return bcirc_oracle(a, b); }
Tensor3 adj(const Tensor3& a) { return transpose_by_definition(a); }

double ortho_err(const Tensor3& x) {
  return fnorm(mul(adj(x), x) - identity_tensor(x.cols(), x.tubes()));
}

void expect_augmented_relations(const Tensor3& a, const AugmentedState& s, double tol) {
  const Tensor3 p = s.P_tensor(), q = s.Q_tensor(), b = s.B_tensor();
  EXPECT_LE(ortho_err(p), tol);
  EXPECT_LE(ortho_err(q), tol);
  EXPECT_LE(rel_err(mul(a, p), mul(q, b)), tol);
  EXPECT_LE(rel_err(mul(adj(q), mul(a, p)), b), tol);
  Tensor3 rhs = mul(p, adj(b));
  rhs += mul(s.residual(), adj(canonical_slice(s.m, s.m, a.tubes())));
  EXPECT_LE(rel_err(mul(adj(a), q), rhs), tol);
  EXPECT_LE(fnorm(mul(adj(p), s.residual())), tol * std::max(1.0, fnorm(s.residual())));
  const Tensor3 bt = s.B_tensor();
  for (Index i = 0; i < s.m; ++i)
    for (Index j = 0; j < i; ++j)
      for (Index t = 0; t < a.tubes(); ++t) EXPECT_EQ(bt(i, j, t), 0.0);
}

std::vector<Tensor3> constant_tubes(const std::vector<double>& values, Index n) {
  std::vector<Tensor3> out;
  for (double v : values) {
    Tensor3 t(1, 1, n);
    t(0, 0, 0) = v;
    if (n > 1) t(0, 0, 1) = 0.1 * v;
    out.push_back(t);
  }
  return out;
}

double max_entry(const SpectralTensor& t) {
  double top = 0.0;
  for (Index s = 0; s < t.frame_count(); ++s) top = std::max(top, t.frame(s).cwiseAbs().maxCoeff());
  return top;
}

}  // namespace

TEST(Restart, ConfigValidation) {
  SolverConfig c;
  c.k = 4;
  c.m = 4;
  EXPECT_THROW(c.validate(10, 10), InvalidArgument);
  c.m = 11;
  EXPECT_THROW(c.validate(10, 12), InvalidArgument);
  c.m = 8;
  c.delta = 0.0;
  EXPECT_THROW(c.validate(10, 10), InvalidArgument);
  c.delta = 1e-8;
  c.max_restarts = 0;
  EXPECT_THROW(c.validate(10, 10), InvalidArgument);
  c.max_restarts = 1;
  EXPECT_NO_THROW(c.validate(10, 10));
}

TEST(Restart, CoreSvdMatchesBlockCirculantRoute) {
  const Tensor3 a = random_tensor(30, 20, 3, 21);
  const BidiagDecomp d = lanczos_bidiag(dense_operator(a), default_start(20, 3), 6);
  const TSVD t = small_svd_of_core(d.B_tensor());
  // Frame singular values of the core are the singular values of bcirc(B).
  const auto frames = oracle::frame_singular_values(d.B_tensor());
  const SpectralTensor s = fft3(t.S);
  for (Index f = 0; f < s.frame_count(); ++f)
    for (Index i = 0; i < 6; ++i) EXPECT_NEAR(s.frame(f)(i, i).real(), frames[f](i), 1e-12);
}

TEST(Restart, ConvergenceBoundTwoRoutes) {
  const Tensor3 a = random_tensor(30, 20, 3, 22);
  const Index m = 10, k = 2;
  const BidiagDecomp d = lanczos_bidiag(dense_operator(a), default_start(20, 3), m);
  const SpectralSVD core = t_svd_spectral(d.B, true);
  for (Mode mode : {Mode::Largest, Mode::Smallest}) {
    const ConvergenceCheck chk = check_convergence(d, core, k, 1e-8, mode);
    const std::vector<Index> sel = tracked_indices(m, k, mode);
    const Tensor3 u = ifft3(core.U);
    const Tensor3 em = canonical_slice(m, m, 3);
    for (Index i = 0; i < k; ++i) {
      const Tensor3 direct = mul(d.residual(), mul(adj(em), u.lateral(sel[i])));
      EXPECT_NEAR(chk.residual[i], fnorm(direct), 1e-12 * std::max(1.0, fnorm(direct)));
    }
    EXPECT_NEAR(chk.threshold, 1e-8 * core.tube(0)(0, 0, 0), 1e-22);
  }
}

TEST(Restart, ConvergenceEdgeCases) {
  const Tensor3 a = random_tensor(30, 20, 3, 23);
  BidiagDecomp d = lanczos_bidiag(dense_operator(a), default_start(20, 3), 6);
  const SpectralSVD core = t_svd_spectral(d.B, true);
  const ConvergenceCheck strict = check_convergence(d, core, 3, 0.0);
  for (bool c : strict.converged) EXPECT_FALSE(c);
  d.beta = SpectralTensor(1, 1, 3);
  const ConvergenceCheck exact = check_convergence(d, core, 3, 0.0);
  for (Index i = 0; i < 3; ++i) {
    EXPECT_EQ(exact.residual[i], 0.0);
    EXPECT_TRUE(exact.converged[i]);
  }
}

TEST(Restart, RitzAugmentKeepsRelations) {
  const Tensor3 a = random_tensor(30, 20, 3, 24);
  const TensorOperator op = dense_operator(a);
  const BidiagDecomp d = lanczos_bidiag(op, default_start(20, 3), 10);
  const SpectralSVD core = t_svd_spectral(d.B, true);
  for (Mode mode : {Mode::Largest, Mode::Smallest}) {
    const AugmentedState s = ritz_augment(op, d, core, 3, mode);
    EXPECT_EQ(s.m, 4u);
    expect_augmented_relations(a, s, 1e-9);
    // Arrowhead: selected singular values on the diagonal, coupling column last.
    const std::vector<Index> sel = tracked_indices(10, 3, mode);
    for (Index f = 0; f < s.B.frame_count(); ++f) {
      const auto& b = s.B.frame(f);
      for (Index i = 0; i < 3; ++i) {
        EXPECT_NEAR(b(i, i).real(), core.sigma[f](sel[i]), 1e-13);
        for (Index j = i + 1; j < 3; ++j) EXPECT_EQ(b(i, j), Complex(0.0));
      }
    }
    const RelationResiduals rr = relation_residuals(op, s);
    EXPECT_LE(std::max({rr.forward, rr.adjoint, rr.p_ortho, rr.q_ortho, rr.residual_ortho}), 1e-9);
  }
}

TEST(Restart, RitzOnExactLowRankIsExact) {
  const Index k = 3;
  const Tensor3 a = oracle::low_rank_tensor(30, 20, 3, constant_tubes({5.0, 3.0, 2.0}, 3), 25);
  const TensorOperator op = dense_operator(a);
  // One step past the rank: the last residual is a replacement direction in
  // the null space rather than a breakdown.
  LanczosOptions lo;
  lo.min_steps = k + 2;
  const BidiagDecomp d = lanczos_bidiag(op, default_start(20, 3), k + 1, lo);
  ASSERT_FALSE(d.breakdown);
  const SpectralSVD core = t_svd_spectral(d.B, true);
  const AugmentedState s = ritz_augment(op, d, core, k, Mode::Largest);
  const double scale = max_entry(s.B);
  EXPECT_LE(std::abs(s.B.frame(0)(k, k)), 1e-10 * scale);
  EXPECT_LE(tube_max(s.beta), 1e-10 * scale);
  const TSVD full = t_svd(a);
  for (Index i = 0; i < k; ++i) EXPECT_LE(fnorm(core.tube(i) - full.tube(i)), 1e-10);

  SolverConfig cfg;
  cfg.k = k;
  cfg.m = 6;
  const SolverResult r = tlbr_solve(a, cfg);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 1u);
  for (Index i = 0; i < k; ++i) EXPECT_LE(fnorm(r.triplets.s[i] - full.tube(i)), 1e-10);
}

TEST(Restart, RitzMatchesMatrixRestart) {
  const Tensor3 a = random_tensor(15, 10, 1, 26);
  const TensorOperator op = dense_operator(a);
  const int m = 7, k = 3;
  const BidiagDecomp d = lanczos_bidiag(op, default_start(10, 1), m);
  const SpectralSVD core = t_svd_spectral(d.B, true);
  const AugmentedState s = ritz_augment(op, d, core, k, Mode::Largest);

  // Augmented restart of the matrix method built directly with Eigen.
  const Eigen::MatrixXd am = oracle::as_matrix(a);
  const oracle::MatrixGK g = oracle::golub_kahan(am, Eigen::VectorXd::Ones(10), m);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g.B, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::MatrixXd qk = g.Q * svd.matrixU().leftCols(k);
  Eigen::MatrixXd pt(10, k + 1);
  pt << g.P * svd.matrixV().leftCols(k), g.next_p;
  Eigen::VectorXd rho = g.beta * svd.matrixU().row(m - 1).head(k).transpose();
  Eigen::VectorXd r = am * g.next_p - qk * rho;
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::VectorXd c = qk.transpose() * r;
    r -= qk * c;
    rho += c;
  }
  const double alpha = r.norm();
  const Eigen::VectorXd q = r / alpha;
  Eigen::VectorXd f = am.transpose() * q - alpha * g.next_p;
  for (int pass = 0; pass < 2; ++pass) f -= pt * (pt.transpose() * f);
  const double beta = f.norm();

  const Tensor3 b = s.B_tensor();
  for (int i = 0; i < k; ++i) {
    EXPECT_NEAR(b(i, i, 0), svd.singularValues()(i), 1e-10);
    EXPECT_NEAR(std::abs(b(i, k, 0)), std::abs(rho(i)), 1e-10);
  }
  EXPECT_NEAR(b(k, k, 0), alpha, 1e-10);
  EXPECT_NEAR(s.beta.frame(0)(0, 0).real(), beta, 1e-10);
  const Tensor3 qt = s.Q_tensor(), np = ifft3(s.next_p);
  for (Index i = 0; i < 15; ++i) EXPECT_NEAR(qt(i, k, 0), q(i), 1e-10);
  for (Index i = 0; i < 10; ++i) EXPECT_NEAR(np(i, 0, 0), f(i) / beta, 1e-10);
}

TEST(Restart, HarmonicValuesMatchGeneralizedEigenproblem) {
  const Tensor3 a = random_tensor(10, 8, 1, 27);
  const TensorOperator op = dense_operator(a);
  const int m = 6, k = 2;
  const BidiagDecomp d = lanczos_bidiag(op, default_start(8, 1), m);
  const Eigen::MatrixXd b = oracle::as_matrix(d.B_tensor());
  const double beta = d.beta.frame(0)(0, 0).real();
  const Eigen::MatrixXd btb = b.transpose() * b;
  const Eigen::VectorXd tail = b.transpose() * Eigen::VectorXd::Unit(m, m - 1);
  const Eigen::MatrixXd lhs = btb * btb + beta * beta * tail * tail.transpose();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(lhs, btb);
  ASSERT_EQ(ges.info(), Eigen::Success);

  // Harmonic values are the k smallest singular values of [B, beta e_m].
  const FrameSVD ext = frame_svd(d.B_extended().frame(0), true);
  for (int i = 0; i < k; ++i) {
    EXPECT_NEAR(ext.S(m - 1 - i), std::sqrt(ges.eigenvalues()(i)), 1e-9);
  }

  // The leading k slices of the harmonic basis span P w for those eigenvectors.
  const AugmentedState s = harmonic_augment(op, d, k);
  expect_augmented_relations(a, s, 1e-9);
  const Eigen::MatrixXd p = oracle::as_matrix(d.P_tensor());
  const Eigen::MatrixXd lead = oracle::as_matrix(s.P_tensor()).leftCols(k);
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd v = p * ges.eigenvectors().col(i);
    v.normalize();
    EXPECT_LE((v - lead * (lead.transpose() * v)).norm(), 1e-9);
  }
}

TEST(Restart, HarmonicValuesViaGramEigenvalues) {
  const Tensor3 a = random_tensor(30, 20, 3, 28);
  const Index m = 7, k = 3;
  const BidiagDecomp d = lanczos_bidiag(dense_operator(a), default_start(20, 3), m);
  const SpectralTensor ext = d.B_extended();
  const TSVD t = small_svd_of_core(ifft3(ext));
  const SpectralTensor s = fft3(t.S);
  for (Index f = 0; f < ext.frame_count(); ++f) {
    const ComplexMatrix gram = ext.frame(f) * ext.frame(f).adjoint();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(gram);
    for (Index i = 0; i < k; ++i) {
      const double sv = s.frame(f)(m - 1 - i, m - 1 - i).real();
      EXPECT_NEAR(sv * sv, es.eigenvalues()(i), 1e-9);
    }
  }
}

TEST(Restart, HarmonicAugmentKeepsRelations) {
  const Tensor3 a = random_tensor(30, 20, 3, 29);
  const TensorOperator op = dense_operator(a);
  const BidiagDecomp d = lanczos_bidiag(op, default_start(20, 3), 10);
  AugmentedState s = harmonic_augment(op, d, 3);
  expect_augmented_relations(a, s, 1e-9);
  extend_bidiag(op, s, 10);
  expect_augmented_relations(a, s, 1e-9);
}

TEST(Restart, HarmonicWithKEqualMMinusOne) {
  const Tensor3 a = random_tensor(8, 6, 3, 30);
  const TensorOperator op = dense_operator(a);
  const Index m = 5;
  const BidiagDecomp d = lanczos_bidiag(op, default_start(6, 3), m);
  ASSERT_FALSE(d.breakdown);
  AugmentedState s = harmonic_augment(op, d, m - 1);
  EXPECT_EQ(s.m, m);
  expect_augmented_relations(a, s, 1e-9);
  extend_bidiag(op, s, m);
  expect_augmented_relations(a, s, 1e-9);
}

TEST(Restart, HarmonicRejectsSingularCore) {
  // Past the rank the core picks up zero diagonal tubes while the replacement
  // directions keep the decomposition alive.
  const Tensor3 a = oracle::low_rank_tensor(12, 9, 3, constant_tubes({4.0, 1.5}, 3), 36);
  const TensorOperator op = dense_operator(a);
  LanczosOptions lo;
  lo.min_steps = 6;
  const BidiagDecomp d = lanczos_bidiag(op, default_start(9, 3), 4, lo);
  ASSERT_FALSE(d.breakdown);
  EXPECT_GT(core_condition(d), 1e12);
  EXPECT_THROW(harmonic_augment(op, d, 2), SingularFrame);
  const BidiagDecomp e = lanczos_bidiag(op, default_start(9, 3), 2, lo);
  EXPECT_THROW(harmonic_augment(op, e, 2), InvalidArgument);
}

TEST(Restart, IdentityConvergesImmediately) {
  SolverConfig cfg;
  cfg.k = 1;
  cfg.m = 2;
  const SolverResult r = tlbr_solve(identity_tensor(5, 3), cfg);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 1u);
  const Tube s = r.triplets.s[0];
  EXPECT_NEAR(s(0, 0, 0), 1.0, 1e-13);
  EXPECT_NEAR(s(0, 0, 1), 0.0, 1e-13);
  EXPECT_NEAR(s(0, 0, 2), 0.0, 1e-13);
}

struct ModeCase {
  Index rows, cols, tubes;
  Mode mode;
  Augmentation aug;
  std::uint64_t seed;
};

class ModeCorrectness : public ::testing::TestWithParam<ModeCase> {};

TEST_P(ModeCorrectness, MatchesDenseTSvd) {
  const ModeCase c = GetParam();
  const Tensor3 a = random_tensor(c.rows, c.cols, c.tubes, c.seed);
  SolverConfig cfg;
  cfg.k = 3;
  cfg.m = 12;
  cfg.delta = 1e-10;
  cfg.mode = c.mode;
  cfg.augmentation = c.aug;
  cfg.max_restarts = 2000;
  const SolverResult r = tlbr_solve(a, cfg);
  ASSERT_TRUE(r.converged);
  const TSVD full = t_svd(a);
  const Index rank = full.rank();
  for (Index i = 0; i < 3; ++i) {
    const Index ref = c.mode == Mode::Largest ? i : rank - 1 - i;
    EXPECT_LE(fnorm(r.triplets.s[i] - full.tube(ref)), 1e-8) << "triplet " << i;
  }
  for (Index i = 1; i < 3; ++i) {
    if (c.mode == Mode::Largest) {
      EXPECT_GE(r.triplets.sigma[i - 1], r.triplets.sigma[i]);
    } else {
      EXPECT_LE(r.triplets.sigma[i - 1], r.triplets.sigma[i]);
    }
  }

  // Residual identities checked by direct tensor arithmetic.
  const double anorm = fnorm(a);
  for (Index i = 0; i < 3; ++i) {
    const Tensor3 u = r.triplets.U.lateral(i), v = r.triplets.V.lateral(i);
    const Tube& s = r.triplets.s[i];
    EXPECT_LE(fnorm(mul(a, v) - mul(u, s)), 1e-10 * anorm);
    EXPECT_LE(fnorm(mul(adj(a), u) - mul(v, s)), r.triplets.residual[i] * (1 + 1e-6) + 1e-12 * anorm);
  }
}

INSTANTIATE_TEST_SUITE_P(
    Shapes, ModeCorrectness,
    ::testing::Values(ModeCase{30, 20, 4, Mode::Largest, Augmentation::Ritz, 40},
                      ModeCase{20, 30, 3, Mode::Largest, Augmentation::Ritz, 41},
                      ModeCase{25, 25, 5, Mode::Smallest, Augmentation::Ritz, 42},
                      ModeCase{30, 20, 4, Mode::Smallest, Augmentation::Harmonic, 43},
                      ModeCase{40, 35, 2, Mode::Smallest, Augmentation::Harmonic, 44}));

TEST(Restart, ResidualEnvelopeDecreases) {
  const Tensor3 a = random_tensor(100, 100, 3, 1);
  SolverConfig cfg;
  cfg.delta = 1e-10;
  const SolverResult r = tlbr_solve(a, cfg);
  ASSERT_TRUE(r.converged);
  std::vector<double> worst(r.iterations, 0.0);
  for (const HistoryRow& row : r.history.rows) {
    worst[row.restart - 1] = std::max(worst[row.restart - 1], row.residual_bound);
  }
  for (Index i = 1; i < worst.size(); ++i) EXPECT_LE(worst[i], worst[i - 1]) << "restart " << i + 1;
}

TEST(Restart, NotConvergedKeepsBestEffort) {
  const Tensor3 a = random_tensor(40, 40, 3, 32);
  SolverConfig cfg;
  cfg.k = 4;
  cfg.m = 8;
  cfg.mode = Mode::Smallest;
  cfg.max_restarts = 2;
  const SolverResult r = tlbr_solve(a, cfg);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 2u);
  EXPECT_EQ(r.history.rows.size(), 8u);
  EXPECT_EQ(r.triplets.size(), 4u);
}

TEST(Restart, KappaThresholdForcesRitz) {
  const Tensor3 a = random_tensor(30, 20, 3, 33);
  SolverConfig cfg;
  cfg.k = 2;
  cfg.m = 8;
  cfg.mode = Mode::Smallest;
  cfg.max_restarts = 5;
  const SolverResult ritz = tlbr_solve(a, cfg);
  cfg.augmentation = Augmentation::Harmonic;
  const SolverResult harm = tlbr_solve(a, cfg);
  EXPECT_GT(harm.harmonic_restarts, 0u);
  cfg.kappa_threshold = 1.0;
  const SolverResult forced = tlbr_solve(a, cfg);
  EXPECT_EQ(forced.harmonic_restarts, 0u);
  std::ostringstream x, y;
  ritz.history.write_csv(x);
  forced.history.write_csv(y);
  EXPECT_EQ(x.str(), y.str());
}

TEST(Restart, HistoryCsvLayout) {
  const Tensor3 a = random_tensor(30, 20, 3, 34);
  SolverConfig cfg;
  cfg.k = 2;
  cfg.m = 8;
  const SolverResult r = tlbr_solve(a, cfg);
  std::ostringstream out;
  r.history.write_csv(out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "restart,triplet_index,residual_bound,sigma_estimate");
  Index rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, r.iterations * 2);
}

TEST(Restart, SeededRunsAreDeterministic) {
  const Tensor3 a = random_tensor(30, 20, 3, 35);
  SolverConfig cfg;
  cfg.k = 3;
  cfg.m = 9;
  cfg.seed = 7;
  cfg.mode = Mode::Smallest;
  cfg.augmentation = Augmentation::Harmonic;
  cfg.max_restarts = 30;
  const SolverResult r1 = tlbr_solve(a, cfg);
  const SolverResult r2 = tlbr_solve(a, cfg);
  std::ostringstream x, y;
  r1.history.write_csv(x);
  r2.history.write_csv(y);
  EXPECT_EQ(x.str(), y.str());
  EXPECT_EQ(fnorm(r1.triplets.U - r2.triplets.U), 0.0);
}
