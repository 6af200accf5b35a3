#include "tlbr/compression.hpp"

#include <algorithm>
#include <string>

#include "tlbr/error.hpp"
#include "tlbr/lanczos.hpp"
#include "tlbr/random.hpp"

namespace tlbr {

namespace {

// k = min(rows, cols): one full bidiagonalization is exact, no restart needed.
// A = Q [B, beta e_m] [P, next_p]^H, so the SVD of the extended core gives
// every triplet.
Tensor3 full_bidiag_approx(const Tensor3& a, const CompressOptions& opts) {
  const Index r = std::min(a.rows(), a.cols());
  const TensorOperator op = dense_operator(a);
  LanczosOptions lo;
  lo.seed = mix_seed(opts.seed.value_or(0), 1);
  lo.min_steps = r;
  const BidiagDecomp d = lanczos_bidiag(op, default_start(a.cols(), a.tubes(), opts.seed), r, lo);
  SpectralTensor right = d.P;
  right.append_laterals(d.next_p);
  const SpectralTensor ext = d.B_extended();
  const SpectralSVD core = t_svd_spectral(ext, true);
  const SpectralTensor u = tprod(d.Q, core.U);
  const SpectralTensor v = tprod(right, core.V);
  return ifft3(tprod(tprod(u, core.S(d.m, d.m)), ttranspose(v)));
}

}  // namespace

Tensor3 reconstruct(const TripletSet& t) {
  return ifft3(tprod(tprod(fft3(t.U), fft3(t.S())), ttranspose(fft3(t.V))));
}

Compressed compress(const Tensor3& a, Index k, CompressMethod method,
                    const CompressOptions& opts) {
  const Index r = std::min(a.rows(), a.cols());
  if (k < 1 || k > r) {
    throw IndexOutOfRange("compress: k=" + std::to_string(k) + " outside 1.." +
                          std::to_string(r));
  }
  Compressed out;
  if (method == CompressMethod::FullTsvd) {
    out.approx = reconstruct(truncated_tsvd(a, k));
  } else if (k == r) {
    out.approx = full_bidiag_approx(a, opts);
    out.iterations = 1;
  } else {
    SolverConfig cfg;
    cfg.k = k;
    cfg.m = opts.m > 0 ? opts.m : std::min(r, 2 * k + 10);
    cfg.delta = opts.delta;
    cfg.max_restarts = opts.max_restarts;
    cfg.seed = opts.seed;
    cfg.mode = Mode::Largest;
    const SolverResult res = tlbr_solve(a, cfg);
    out.approx = reconstruct(res.triplets);
    out.iterations = res.iterations;
    out.converged = res.converged;
  }
  const double base = fnorm(a);
  out.rel_error = base > 0.0 ? fnorm(out.approx - a) / base : fnorm(out.approx);
  return out;
}

}  // namespace tlbr
