#pragma once

#include <Eigen/Core>

#include "tlbr/tensor.hpp"

namespace tlbr {

struct FrameSVD {
  ComplexMatrix U;
  Eigen::VectorXd S;  // descending
  ComplexMatrix V;
};

/// A = U diag(S) V^H. Economy gives r = min(rows, cols) columns in U and V;
/// otherwise U and V are square. The largest-magnitude entry of every U
/// column is real and positive.
/// Throws NoConvergence if the Jacobi sweeps exceed 100 * min(rows, cols).
FrameSVD frame_svd(const ComplexMatrix& a, bool economy = true);

struct FrameQR {
  ComplexMatrix Q;
  ComplexMatrix R;  // upper triangular, real non-negative diagonal
};

/// Householder QR. Economy mode requires rows >= cols (DimMismatch).
FrameQR frame_qr(const ComplexMatrix& a, bool economy = true);

/// Solves R X = B for upper-triangular R by back substitution.
/// Throws SingularFrame when a pivot is below 1e3 * eps * max |R_jj|.
ComplexMatrix frame_tri_solve(const ComplexMatrix& r, const ComplexMatrix& b);

/// Ratio of the largest to the smallest singular value (inf if singular).
double frame_condition(const ComplexMatrix& a);

}  // namespace tlbr
