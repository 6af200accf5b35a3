#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "tlbr/factorizations.hpp"
#include "tlbr/lanczos.hpp"

namespace tlbr {

enum class Mode { Largest, Smallest };
enum class Augmentation { Ritz, Harmonic };

struct SolverConfig {
  Index k = 4;
  Index m = 20;
  double delta = 1e-8;
  Index max_restarts = 200;
  Mode mode = Mode::Largest;
  Augmentation augmentation = Augmentation::Ritz;
  /// Seed for the starting slice; the all-ones slice is used when empty.
  std::optional<std::uint64_t> seed;
  /// Harmonic restarts need every core frame to have a condition number at
  /// most this large.
  double kappa_threshold = 1.0 / std::sqrt(std::numeric_limits<double>::epsilon());
  /// Re-check both augmented relations after each restart (costs 2(k+1)
  /// operator applications); a failed harmonic check falls back to Ritz.
  bool verify_augmentation = true;
  bool reorthogonalize = true;

  /// Throws InvalidArgument unless k < m <= min(rows, cols), delta > 0 and
  /// max_restarts >= 1.
  void validate(Index rows, Index cols) const;
};

struct TripletSet {
  Tensor3 U;                   // rows x k x n
  Tensor3 V;                   // cols x k x n
  std::vector<Tube> s;         // singular tubes
  std::vector<double> sigma;   // fnorm of each tube
  std::vector<double> residual;
  std::vector<bool> converged;
  Mode mode = Mode::Largest;

  Index size() const { return s.size(); }
  /// k x k f-diagonal tensor holding the tubes.
  Tensor3 S() const;
};

struct HistoryRow {
  Index restart;
  Index triplet_index;  // one-based
  double residual_bound;
  double sigma_estimate;
};

struct ConvergenceHistory {
  std::vector<HistoryRow> rows;
  void write_csv(std::ostream& out) const;
};

struct SolverResult {
  TripletSet triplets;
  ConvergenceHistory history;
  bool converged = false;
  Index iterations = 0;  // number of convergence checks
  Index operator_applications = 0;
  Index harmonic_restarts = 0;
  Index ritz_fallbacks = 0;
};

using AugmentedState = BidiagDecomp;

/// Frame-wise SVD of the core (m x m or m x (m + 1)).
TSVD small_svd_of_core(const Tensor3& b);

/// Core indices tracked in `mode`: the first k, or the last k smallest first.
std::vector<Index> tracked_indices(Index m, Index k, Mode mode);

struct ConvergenceCheck {
  std::vector<double> residual;
  std::vector<bool> converged;
  double threshold = 0.0;
};

/// Residual norms ||next_p * beta * E_m^H * U_i|| of the selected core
/// triplets and their comparison with delta * (first entry of the leading
/// singular tube).
ConvergenceCheck check_convergence(const BidiagDecomp& d, const SpectralSVD& core,
                                   const std::vector<Index>& selected, double delta);
ConvergenceCheck check_convergence(const BidiagDecomp& d, const SpectralSVD& core,
                                   Index k, double delta, Mode mode = Mode::Largest);

/// Restart from the selected Ritz triplets. The result holds k + 1 columns;
/// `breakdown` is set when the new residual vanishes.
AugmentedState ritz_augment(const TensorOperator& a, const BidiagDecomp& d,
                            const SpectralSVD& core, Index k, Mode mode);

/// Restart from the k smallest harmonic Ritz triplets. Throws SingularFrame
/// when the core cannot be inverted frame-wise.
AugmentedState harmonic_augment(const TensorOperator& a, const BidiagDecomp& d, Index k);

struct RelationResiduals {
  double forward = 0.0;   // ||A P - Q B|| / ||B||
  double adjoint = 0.0;   // ||A^H Q - P B^H - next_p beta E^H|| / ||B||
  double p_ortho = 0.0;   // ||P^H P - I||
  double q_ortho = 0.0;
  double residual_ortho = 0.0;  // ||P^H next_p||
};

RelationResiduals relation_residuals(const TensorOperator& a, const BidiagDecomp& d);

/// Largest frame condition number of the square core.
double core_condition(const BidiagDecomp& d);

SolverResult tlbr_solve(const TensorOperator& a, const SolverConfig& cfg);
SolverResult tlbr_solve(const Tensor3& a, const SolverConfig& cfg);

}  // namespace tlbr
