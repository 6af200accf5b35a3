#pragma once

#include <cstdint>
#include <optional>

#include "tlbr/restart.hpp"

namespace tlbr {

enum class CompressMethod { Tlbr, FullTsvd };

struct CompressOptions {
  /// Bidiagonalization length; 0 picks min(min(rows, cols), 2k + 10).
  Index m = 0;
  double delta = 1e-8;
  Index max_restarts = 200;
  std::optional<std::uint64_t> seed;
};

struct Compressed {
  Tensor3 approx;
  double rel_error = 0.0;  // ||approx - A|| / ||A||
  Index iterations = 0;
  bool converged = true;
};

/// Rank-k t-SVD approximation U_k * S_k * V_k^H. Throws IndexOutOfRange
/// unless 1 <= k <= min(rows, cols).
Compressed compress(const Tensor3& a, Index k, CompressMethod method,
                    const CompressOptions& opts = {});

/// Sum of U(:, i) * s_i * V(:, i)^H over the triplets.
Tensor3 reconstruct(const TripletSet& t);

}  // namespace tlbr
