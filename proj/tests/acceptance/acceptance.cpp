// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tlbr/compression.hpp"
#include "tlbr/factorizations.hpp"
#include "tlbr/image_io.hpp"
#include "tlbr/random.hpp"
#include "tlbr/recognition.hpp"
#include "tlbr/restart.hpp"
#include "tlbr/t3b_io.hpp"

using namespace tlbr;
namespace fs = std::filesystem;
namespace oc = tlbr::oracle;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TLBR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Table-1 tensor: 100 x 100 x 3 standard normal.
Tensor3 table_tensor(std::uint64_t seed) { return randn_tensor(100, 100, 3, seed); }

SolverConfig table_config(Mode mode, Augmentation aug, double delta, Index max_restarts) {
  SolverConfig cfg;
  cfg.k = 4;
  cfg.m = 20;
  cfg.mode = mode;
  cfg.augmentation = aug;
  cfg.delta = delta;
  cfg.max_restarts = max_restarts;
  return cfg;
}

// ---------------------------------------------------------------------------

Outcome c1_tprod_oracle() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Index l = 1 + s % 5, p = 1 + (s / 5) % 5, q = 1 + (s * 3) % 5, n = 1 + (s / 3) % 4;
    const Tensor3 a = oc::random_tensor(l, p, n, 1000 + s);
    const Tensor3 b = oc::random_tensor(p, q, n, 2000 + s);
    worst = std::max(worst, oc::rel_err(tprod(a, b), oc::bcirc_oracle(a, b)));
  }
  return {worst <= 1e-12, "max rel err " + fmt("%.2e", worst) + " over 100 pairs"};
}

Outcome c2_tsvd_contract() {
  double recon = 0.0, ortho = 0.0, mean_id = 0.0;
  bool ordered = true;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Index l = 1 + s % 12, p = 1 + (s * 7) % 10, n = 1 + (s * 3) % 5;
    const Tensor3 a = oc::random_tensor(l, p, n, 3000 + s);
    const TSVD t = t_svd(a);
    recon = std::max(recon, oc::rel_err(reconstruct(t), a));
    const Index r = t.rank();
    const Tensor3 eye = identity_tensor(r, n);
    for (const Tensor3* f : {&t.U, &t.V}) {
      const Tensor3 g = oc::bcirc_oracle(oc::transpose_by_definition(*f), *f);
      ortho = std::max(ortho, oc::max_abs_diff(g, eye));
    }
    for (Index i = 0; i < r; ++i) {
      const auto frames = oc::naive_dft(t.tube(i));
      double mean = 0.0;
      for (const auto& fr : frames) mean += fr(0, 0).real();
      mean /= static_cast<double>(frames.size());
      mean_id = std::max(mean_id, std::abs(t.S(i, i, 0) - mean) / std::max(1.0, std::abs(mean)));
      if (i > 0 && t.sigma(i) > t.sigma(i - 1) * (1 + 1e-14)) ordered = false;
    }
  }
  const bool pass = recon <= 1e-10 && ortho <= 1e-11 && mean_id <= 1e-12 && ordered;
  return {pass, "recon " + fmt("%.2e", recon) + ", ortho " + fmt("%.2e", ortho) +
                    ", first-entry identity " + fmt("%.2e", mean_id) +
                    (ordered ? ", norms ordered" : ", norms NOT ordered")};
}

Outcome c3_largest_tubes() {
  const Tensor3 a = table_tensor(1);
  const TSVD full = t_svd(a);
  SolverConfig cfg = table_config(Mode::Largest, Augmentation::Ritz, 1e-10, 200);
  cfg.seed = 1;
  const SolverResult r = tlbr_solve(a, cfg);
  double worst = 0.0;
  for (Index i = 0; i < 4; ++i) worst = std::max(worst, fnorm(r.triplets.s[i] - full.tube(i)));
  return {r.converged && worst <= 1e-10,
          "max tube error " + fmt("%.2e", worst) + " after " +
              std::to_string(r.iterations) + " iteration(s)"};
}

Outcome c4_iteration_counts() {
  bool pass = true;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Tensor3 a = table_tensor(seed);
    SolverConfig cfg = table_config(Mode::Largest, Augmentation::Ritz, 1e-10, 200);
    cfg.seed = seed;
    const SolverResult r20 = tlbr_solve(a, cfg);
    cfg.m = 10;
    const SolverResult r10 = tlbr_solve(a, cfg);
    pass = pass && r20.converged && r10.converged && r20.iterations <= 5 &&
           r10.iterations > r20.iterations;
    detail += (detail.empty() ? "" : ", ") + std::string("seed ") + std::to_string(seed) +
              ": m=20 " + std::to_string(r20.iterations) + " vs m=10 " +
              std::to_string(r10.iterations);
  }
  return {pass, detail};
}

Outcome c5_smallest_harmonic() {
  constexpr int kSeeds = 5;
  std::vector<double> ritz(4, 0.0), harm(4, 0.0);
  double harm_worst = 0.0;
  bool converged = true;
  for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
    const Tensor3 a = table_tensor(seed);
    const TSVD full = t_svd(a);
    const Index rank = full.rank();
    for (Augmentation aug : {Augmentation::Ritz, Augmentation::Harmonic}) {
      SolverConfig cfg = table_config(Mode::Smallest, aug, 1e-8, 1000);
      cfg.seed = seed;
      const SolverResult r = tlbr_solve(a, cfg);
      converged = converged && r.converged;
      for (Index i = 0; i < 4; ++i) {
        const double e = fnorm(r.triplets.s[i] - full.tube(rank - 1 - i));
        (aug == Augmentation::Ritz ? ritz : harm)[i] += e / kSeeds;
        if (aug == Augmentation::Harmonic) harm_worst = std::max(harm_worst, e);
      }
    }
  }
  int wins = 0;
  for (int i = 0; i < 4; ++i) wins += harm[i] <= ritz[i] ? 1 : 0;
  return {converged && harm_worst <= 1e-9 && wins >= 3,
          "harmonic max error " + fmt("%.2e", harm_worst) + ", harmonic <= Ritz on " +
              std::to_string(wins) + "/4 tubes (mean over 5 seeds)"};
}

Outcome c6_matrix_case() {
  double worst = 0.0;
  bool converged = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Tensor3 a = oc::random_tensor(40, 25, 1, 4000 + seed);
    SolverConfig cfg;
    cfg.k = 4;
    cfg.m = 12;
    cfg.delta = 1e-12;
    cfg.max_restarts = 500;
    cfg.seed = seed;
    const SolverResult r = tlbr_solve(a, cfg);
    converged = converged && r.converged;
    const Eigen::VectorXd want = Eigen::JacobiSVD<Eigen::MatrixXd>(oc::as_matrix(a)).singularValues();
    for (Index i = 0; i < 4; ++i) {
      worst = std::max(worst, std::abs(r.triplets.s[i](0, 0, 0) - want(static_cast<Eigen::Index>(i))));
    }
  }
  return {converged && worst <= 1e-10, "max value error " + fmt("%.2e", worst) + " on 5 matrices"};
}

Outcome c7_compression(const fs::path& work) {
  const std::vector<Index> ks = {5, 10, 15, 25};
  struct Img {
    std::string name;
    Tensor3 data;
  };
  std::vector<Img> images;
  images.push_back({"smooth256.png", fixture::smooth_image(256, 256, 1)});
  images.push_back({"noisy128x200.jpg", fixture::smooth_image(128, 200, 2, 0.15)});
  double gap = 0.0;
  bool monotone = true;
  for (const Img& img : images) {
    const fs::path path = work / img.name;
    save_image(img.data, path);
    const Tensor3 a = load_image(path).data;
    double prev = std::numeric_limits<double>::infinity();
    CompressOptions opts;
    opts.seed = 1;
    for (Index k : ks) {
      const Compressed t = compress(a, k, CompressMethod::Tlbr, opts);
      const Compressed f = compress(a, k, CompressMethod::FullTsvd, opts);
      gap = std::max(gap, std::abs(t.rel_error - f.rel_error));
      monotone = monotone && t.rel_error < prev;
      prev = t.rel_error;
    }
  }
  return {gap <= 1e-6 && monotone,
          "max relerr gap " + fmt("%.2e", gap) + (monotone ? ", monotone in k" : ", NOT monotone")};
}

Outcome c8_recognition(const fs::path& work) {
  const fs::path root = work / "faces";
  fixture::write_dataset(fixture::clustered_faces(5, 6, 24, 20, 8), root);
  const FaceSplit split = build_face_db(root, 2, 1);
  const ProjectionBasis basis = train_basis(split.db, 4, 8);
  const double rate = identification_rate(basis, split.test);
  double self = 0.0;
  bool self_label = true;
  for (Index i = 0; i < split.db.size(); ++i) {
    const Tensor3 probe = load_image(split.db.sources[i]).data;
    const Match m = identify(basis, probe);
    self = std::max(self, m.distance);
    self_label = self_label && m.label == split.db.labels[i];
  }
  return {rate == 100.0 && self <= 1e-9 && self_label,
          "rate " + fmt("%.1f", rate) + "%, max self distance " + fmt("%.2e", self)};
}

Outcome c9_history_envelope(const fs::path& work) {
  const fs::path t = work / "c9.t3b";
  write_t3b(table_tensor(1), t);
  const fs::path out = work / "c9";
  const int code = run_cli("svd " + t.string() + " --k 4 --m 20 --delta 1e-10 --seed 1 --out " +
                           out.string());
  if (code != 0) return {false, "svd exited with " + std::to_string(code)};
  std::ifstream in(out / "history.csv");
  std::string line;
  std::getline(in, line);
  std::map<Index, double> worst;
  while (std::getline(in, line)) {
    Index restart = 0, idx = 0;
    double bound = 0.0, sigma = 0.0;
    if (std::sscanf(line.c_str(), "%zu,%zu,%lf,%lf", &restart, &idx, &bound, &sigma) != 4) {
      return {false, "bad history row: " + line};
    }
    worst[restart] = std::max(worst[restart], bound);
  }
  if (worst.size() < 2) return {false, "fewer than two restarts recorded"};
  // Acceptance bound uses the first entry of the leading singular tube.
  const double threshold = 1e-10 * t_svd(table_tensor(1)).tube(0)(0, 0, 0);
  const double first = worst.begin()->second;
  const double last = worst.rbegin()->second;
  // Envelope: no restart rises above the first one, and the running minimum
  // reaches the last value.
  bool envelope = true;
  double lowest = first;
  for (const auto& [r, w] : worst) {
    envelope = envelope && w <= first;
    lowest = std::min(lowest, w);
  }
  envelope = envelope && last <= lowest;
  return {last <= threshold && last < first && envelope,
          "worst bound " + fmt("%.2e", first) + " -> " + fmt("%.2e", last) + " (threshold " +
              fmt("%.2e", threshold) + ") over " + std::to_string(worst.size()) + " restarts"};
}

Outcome c10_determinism(const fs::path& work) {
  const fs::path faces = work / "faces10";
  fixture::write_dataset(fixture::clustered_faces(5, 6, 24, 20, 8), faces);
  std::vector<std::string> diffs;
  for (int run = 0; run < 2; ++run) {
    const std::string tag = std::to_string(run);
    if (run_cli("bench --suite table1 --seed 1 --out " + (work / ("b" + tag)).string()) != 0 ||
        run_cli("recognize " + faces.string() + " --holdout 2 --k 4 --m 8 --seed 1 --out " +
                (work / ("r" + tag)).string()) != 0) {
      return {false, "CLI run failed"};
    }
  }
  const std::vector<fs::path> files = {"b/table1.csv", "r/matches.csv", "r/rate.csv"};
  for (const fs::path& f : files) {
    const std::string dir = f.parent_path().string();
    const fs::path a = work / (dir + "0") / f.filename();
    const fs::path b = work / (dir + "1") / f.filename();
    const std::string sa = slurp(a);
    if (sa.empty() || sa != slurp(b)) diffs.push_back(f.string());
  }
  std::string detail = std::to_string(files.size() - diffs.size()) + "/" +
                       std::to_string(files.size()) + " CSV files identical";
  for (const auto& d : diffs) detail += ", differs: " + d;
  return {diffs.empty(), detail};
}

}  // namespace

int main() {
  fixture::TempDir work("acceptance");
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, c1_tprod_oracle},
      {2, c2_tsvd_contract},
      {3, c3_largest_tubes},
      {4, c4_iteration_counts},
      {5, c5_smallest_harmonic},
      {6, c6_matrix_case},
      {7, [&] { return c7_compression(work.path()); }},
      {8, [&] { return c8_recognition(work.path()); }},
      {9, [&] { return c9_history_envelope(work.path()); }},
      {10, [&] { return c10_determinism(work.path()); }},
  };
  int failures = 0;
  for (const auto& [id, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d: %s (%s; %.2fs)\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
