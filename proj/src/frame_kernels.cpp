#include "tlbr/frame_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "tlbr/error.hpp"

namespace tlbr {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr Eigen::Index kJacobiLimit = 64;

using Vec = Eigen::VectorXcd;

void require_finite(const ComplexMatrix& a, const char* op) {
  if (a.size() == 0) throw InvalidArgument(std::string(op) + ": empty matrix");
  if (!a.allFinite()) throw InvalidArgument(std::string(op) + ": non-finite entry");
}

// Two passes of classical Gram-Schmidt of v against the first `count`
// columns of basis. Returns the remaining norm.
double orthogonalize(Vec& v, const ComplexMatrix& basis, Eigen::Index count) {
  for (int pass = 0; pass < 2; ++pass) {
    if (count == 0) break;
    const Vec coef = basis.leftCols(count).adjoint() * v;
    v.noalias() -= basis.leftCols(count) * coef;
  }
  return v.norm();
}

// Appends columns to `q` (rows x have) until it has `want` orthonormal columns,
// each time taking the unit vector with the largest orthogonal remainder.
void complete_basis(ComplexMatrix& q, Eigen::Index have, Eigen::Index want) {
  const Eigen::Index rows = q.rows();
  ComplexMatrix out(rows, want);
  out.leftCols(have) = q.leftCols(have);
  for (Eigen::Index filled = have; filled < want; ++filled) {
    Vec best;
    double best_norm = 0.0;
    for (Eigen::Index e = 0; e < rows; ++e) {
      Vec v = Vec::Zero(rows);
      v(e) = 1.0;
      const double nrm = orthogonalize(v, out, filled);
      if (nrm > best_norm + 1e-12) {
        best_norm = nrm;
        best = std::move(v);
      }
    }
    if (best_norm < 1e-8) throw InternalError("basis completion failed");
    out.col(filled) = best / best_norm;
  }
  q = std::move(out);
}

// Replaces columns of `u` whose singular value is negligible and
// re-orthonormalizes the rest in order.
void orthonormalize_columns(ComplexMatrix& u, const Eigen::VectorXd& s) {
  const Eigen::Index rows = u.rows();
  const Eigen::Index cols = u.cols();
  const double smax = cols > 0 ? s(0) : 0.0;
  const double tiny = static_cast<double>(std::max(rows, cols)) * kEps * smax;
  ComplexMatrix out(rows, cols);
  std::vector<Eigen::Index> missing;
  for (Eigen::Index j = 0; j < cols; ++j) {
    if (s(j) <= tiny || s(j) == 0.0) {
      missing.push_back(j);
      out.col(j).setZero();
      continue;
    }
    Vec v = u.col(j);
    // Orthogonalize against every column already accepted.
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < j; ++i) v -= out.col(i) * out.col(i).dot(v);
    }
    const double nrm = v.norm();
    if (nrm < 0.5) {
      missing.push_back(j);
      out.col(j).setZero();
      continue;
    }
    out.col(j) = v / nrm;
  }
  // Fill negligible directions with unit vectors orthogonal to the rest.
  for (Eigen::Index j : missing) {
    Vec best;
    double best_norm = 0.0;
    for (Eigen::Index e = 0; e < rows; ++e) {
      Vec v = Vec::Zero(rows);
      v(e) = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index i = 0; i < cols; ++i) {
          if (i != j) v -= out.col(i) * out.col(i).dot(v);
        }
      }
      const double nrm = v.norm();
      if (nrm > best_norm + 1e-12) {
        best_norm = nrm;
        best = std::move(v);
      }
    }
    if (best_norm < 1e-8) throw InternalError("could not complete singular basis");
    out.col(j) = best / best_norm;
  }
  u = std::move(out);
}

void fix_phase(FrameSVD& f) {
  for (Eigen::Index j = 0; j < f.U.cols(); ++j) {
    Eigen::Index at = 0;
    f.U.col(j).cwiseAbs().maxCoeff(&at);
    const Complex pivot = f.U(at, j);
    const double mag = std::abs(pivot);
    if (mag == 0.0) continue;
    const Complex ph = std::conj(pivot) / mag;
    f.U.col(j) *= ph;
    f.U(at, j) = Complex(std::abs(f.U(at, j)), 0.0);
    if (j < f.V.cols()) f.V.col(j) *= ph;
  }
}

// One-sided Jacobi on a matrix with rows >= cols. W is overwritten with A V.
void jacobi_sweeps(ComplexMatrix& w, ComplexMatrix& v) {
  const Eigen::Index rows = w.rows();
  const Eigen::Index cols = w.cols();
  const double tol = static_cast<double>(rows) * kEps;
  const Eigen::Index max_sweeps = 100 * std::max<Eigen::Index>(cols, 1);
  // Columns at rounding level of the whole matrix carry no direction worth
  // orthogonalizing against.
  const double floor = kEps * kEps * w.squaredNorm();
  for (Eigen::Index sweep = 0;; ++sweep) {
    if (sweep >= max_sweeps) {
      throw NoConvergence("frame_svd: Jacobi sweep limit reached");
    }
    bool rotated = false;
    for (Eigen::Index i = 0; i + 1 < cols; ++i) {
      for (Eigen::Index j = i + 1; j < cols; ++j) {
        const double a = w.col(i).squaredNorm();
        const double b = w.col(j).squaredNorm();
        if (a <= floor || b <= floor) continue;
        const Complex c = w.col(i).dot(w.col(j));
        const double cabs = std::abs(c);
        if (cabs <= tol * std::sqrt(a * b)) continue;
        rotated = true;
        const Complex rot = std::conj(c) / cabs;  // e^{-i arg c}
        const double zeta = (b - a) / (2.0 * cabs);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        const Vec wi = w.col(i);
        const Vec wj = w.col(j) * rot;
        w.col(i) = cs * wi - sn * wj;
        w.col(j) = sn * wi + cs * wj;
        const Vec vi = v.col(i);
        const Vec vj = v.col(j) * rot;
        v.col(i) = cs * vi - sn * vj;
        v.col(j) = sn * vi + cs * vj;
      }
    }
    if (!rotated) return;
  }
}

// Economy SVD of a matrix with rows >= cols via QR + one-sided Jacobi.
FrameSVD svd_tall(const ComplexMatrix& a) {
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = a.cols();
  ComplexMatrix q;
  ComplexMatrix w;
  if (rows > cols) {
    FrameQR qr = frame_qr(a, true);
    q = std::move(qr.Q);
    w = std::move(qr.R);
  } else {
    w = a;
  }
  ComplexMatrix v = ComplexMatrix::Identity(cols, cols);
  jacobi_sweeps(w, v);

  Eigen::VectorXd norms(cols);
  for (Eigen::Index j = 0; j < cols; ++j) norms(j) = w.col(j).norm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(cols));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    return norms(x) > norms(y);
  });

  FrameSVD out;
  out.S.resize(cols);
  ComplexMatrix u(w.rows(), cols);
  out.V.resize(cols, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    out.S(j) = norms(src);
    out.V.col(j) = v.col(src);
    if (norms(src) > 0.0) {
      u.col(j) = w.col(src) / norms(src);
    } else {
      u.col(j).setZero();
    }
  }
  orthonormalize_columns(u, out.S);
  out.U = rows > cols ? ComplexMatrix(q * u) : u;
  return out;
}

FrameSVD svd_large(const ComplexMatrix& a, bool economy) {
  const unsigned opts = economy ? (Eigen::ComputeThinU | Eigen::ComputeThinV)
                                : (Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (a.imag().cwiseAbs().maxCoeff() == 0.0) {
    // Keep real frames real so the inverse FFT stays symmetric.
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a.real(), opts);
    if (svd.info() != Eigen::Success) {
      throw NoConvergence("frame_svd: divide-and-conquer SVD failed");
    }
    return FrameSVD{svd.matrixU().cast<Complex>(), svd.singularValues(),
                    svd.matrixV().cast<Complex>()};
  }
  Eigen::BDCSVD<ComplexMatrix> svd(a, opts);
  if (svd.info() != Eigen::Success) {
    throw NoConvergence("frame_svd: divide-and-conquer SVD failed");
  }
  FrameSVD out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  return out;
}

}  // namespace

FrameSVD frame_svd(const ComplexMatrix& a, bool economy) {
  require_finite(a, "frame_svd");
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = a.cols();
  FrameSVD out;
  if (std::min(rows, cols) > kJacobiLimit) {
    out = svd_large(a, economy);
  } else if (rows >= cols) {
    out = svd_tall(a);
    if (!economy && rows > cols) complete_basis(out.U, cols, rows);
  } else {
    FrameSVD t = svd_tall(a.adjoint());
    out.U = std::move(t.V);
    out.S = std::move(t.S);
    out.V = std::move(t.U);
    if (!economy) complete_basis(out.V, rows, cols);
  }
  fix_phase(out);
  return out;
}

FrameQR frame_qr(const ComplexMatrix& a, bool economy) {
  require_finite(a, "frame_qr");
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = a.cols();
  if (economy && rows < cols) {
    throw DimMismatch("frame_qr: economy mode needs rows >= cols");
  }
  const Eigen::Index steps = std::min(rows, cols);
  ComplexMatrix r = a;
  std::vector<Vec> reflectors;
  reflectors.reserve(static_cast<std::size_t>(steps));
  for (Eigen::Index j = 0; j < steps; ++j) {
    const Eigen::Index len = rows - j;
    Vec v = r.block(j, j, len, 1);
    const double nx = v.norm();
    if (nx == 0.0) {
      reflectors.emplace_back();
      continue;
    }
    const Complex x0 = v(0);
    const Complex ph = std::abs(x0) > 0.0 ? x0 / std::abs(x0) : Complex(1.0, 0.0);
    const Complex alpha = -ph * nx;
    v(0) -= alpha;
    const double vv = v.squaredNorm();
    if (vv == 0.0) {
      reflectors.emplace_back();
      continue;
    }
    auto blk = r.block(j, j, len, cols - j);
    const Eigen::RowVectorXcd proj = v.adjoint() * blk;
    blk.noalias() -= (2.0 / vv) * v * proj;
    r.block(j + 1, j, len - 1, 1).setZero();
    r(j, j) = alpha;
    reflectors.push_back(v / std::sqrt(vv));
  }

  const Eigen::Index qcols = economy ? cols : rows;
  ComplexMatrix q = ComplexMatrix::Identity(rows, qcols);
  for (Eigen::Index j = steps - 1; j >= 0; --j) {
    const Vec& v = reflectors[static_cast<std::size_t>(j)];
    if (v.size() == 0) continue;
    auto blk = q.bottomRows(rows - j);
    const Eigen::RowVectorXcd proj = v.adjoint() * blk;
    blk.noalias() -= 2.0 * v * proj;
  }

  FrameQR out;
  out.R = economy ? ComplexMatrix(r.topRows(cols)) : r;
  for (Eigen::Index j = 0; j < steps; ++j) {
    const Complex d = out.R(j, j);
    const double mag = std::abs(d);
    if (mag == 0.0) continue;
    const Complex ph = d / mag;
    out.R.row(j) *= std::conj(ph);
    out.R(j, j) = Complex(mag, 0.0);
    q.col(j) *= ph;
  }
  out.Q = std::move(q);
  return out;
}

ComplexMatrix frame_tri_solve(const ComplexMatrix& r, const ComplexMatrix& b) {
  require_finite(r, "frame_tri_solve");
  require_finite(b, "frame_tri_solve");
  const Eigen::Index n = r.rows();
  if (r.cols() != n) throw DimMismatch("frame_tri_solve: R must be square");
  if (b.rows() != n) throw DimMismatch("frame_tri_solve: B row count");
  const double dmax = r.diagonal().cwiseAbs().maxCoeff();
  const double floor = 1e3 * kEps * dmax;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (dmax == 0.0 || std::abs(r(i, i)) <= floor) {
      throw SingularFrame("frame_tri_solve: pivot " + std::to_string(i) +
                          " is numerically zero");
    }
  }
  ComplexMatrix x = b;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      Complex acc = x(i, c);
      for (Eigen::Index k = i + 1; k < n; ++k) acc -= r(i, k) * x(k, c);
      x(i, c) = acc / r(i, i);
    }
  }
  return x;
}

double frame_condition(const ComplexMatrix& a) {
  const FrameSVD f = frame_svd(a, true);
  const double smin = f.S(f.S.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return f.S(0) / smin;
}

}  // namespace tlbr
