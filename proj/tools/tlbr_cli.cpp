// tlbr: command-line front end for the restarted tensor Lanczos solver.

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include "tlbr/compression.hpp"
#include "tlbr/error.hpp"
#include "tlbr/image_io.hpp"
#include "tlbr/parallel.hpp"
#include "tlbr/random.hpp"
#include "tlbr/recognition.hpp"
#include "tlbr/restart.hpp"
#include "tlbr/t3b_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tlbr;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr double kSizeGuard = 2e6;

enum Exit { kOk = 0, kIo = 1, kConfig = 2, kNotConverged = 3 };

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- small helpers ---------------------------------------------------------

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

// FNV-1a over the file bytes.
std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return hex64(h);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

Mode parse_mode(const std::string& s) {
  const std::string v = lower(s);
  if (v == "largest") return Mode::Largest;
  if (v == "smallest") return Mode::Smallest;
  throw ConfigError("mode must be largest or smallest, got " + s);
}

Augmentation parse_aug(const std::string& s) {
  const std::string v = lower(s);
  if (v == "ritz") return Augmentation::Ritz;
  if (v == "harm" || v == "harmonic") return Augmentation::Harmonic;
  throw ConfigError("aug must be ritz or harm, got " + s);
}

std::vector<Index> parse_index_list(const std::string& s) {
  std::vector<Index> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(static_cast<Index>(v));
    } catch (const std::exception&) {
      throw ConfigError("expected a positive integer list, got " + s);
    }
  }
  if (out.empty()) throw ConfigError("empty integer list");
  return out;
}

struct Dims {
  Index rows, cols, tubes;
  std::string text() const {
    return std::to_string(rows) + "x" + std::to_string(cols) + "x" + std::to_string(tubes);
  }
  double entries() const {
    return static_cast<double>(rows) * static_cast<double>(cols) * static_cast<double>(tubes);
  }
};

std::vector<Dims> parse_sizes(const std::string& s) {
  std::vector<Dims> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    unsigned long long r = 0, c = 0, t = 0;
    char tail = 0;
    if (std::sscanf(item.c_str(), "%llux%llux%llu%c", &r, &c, &t, &tail) != 3 || !r || !c || !t) {
      throw ConfigError("size must look like 100x100x3, got " + item);
    }
    out.push_back({r, c, t});
  }
  if (out.empty()) throw ConfigError("no sizes given");
  return out;
}

void guard_size(const Dims& d, bool force) {
  if (!force && d.entries() > kSizeGuard) {
    throw ConfigError("size " + d.text() + " exceeds " + num(kSizeGuard) +
                      " entries; pass --force to run it anyway");
  }
}

// ---- manifest --------------------------------------------------------------

struct Manifest {
  json doc;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  Manifest(const std::string& command, const std::vector<std::string>& argv) {
    doc["command"] = command;
    doc["argv"] = argv;
    doc["versions"] = {{"tlbr", kVersion},
                       {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                     std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                     std::to_string(EIGEN_MINOR_VERSION)},
                       {"compiler", __VERSION__}};
    doc["threads"] = thread_limit();
    doc["inputs"] = json::object();
    doc["outputs"] = json::array();
  }
  void input(const fs::path& p) { doc["inputs"][p.string()] = file_hash(p); }
  void output(const fs::path& p) { doc["outputs"].push_back(p.string()); }
  void write(const fs::path& dir) {
    doc["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const fs::path path = dir / "manifest.json";
    open_out(path) << doc.dump(2) << '\n';
  }
};

// ---- svd -------------------------------------------------------------------

struct SvdArgs {
  std::string input;
  Index k = 4;
  Index m = 20;
  std::string mode = "largest";
  std::string aug = "ritz";
  double delta = 1e-8;
  Index max_restarts = 200;
  std::optional<std::uint64_t> seed;
  std::string reference;
  std::string out = "tlbr_out";
};

int run_svd(const SvdArgs& a, Manifest& mf) {
  SolverConfig cfg;
  cfg.k = a.k;
  cfg.m = a.m;
  cfg.mode = parse_mode(a.mode);
  cfg.augmentation = parse_aug(a.aug);
  cfg.delta = a.delta;
  cfg.max_restarts = a.max_restarts;
  cfg.seed = a.seed;
  if (!a.reference.empty() && a.reference != "full-tsvd") {
    throw ConfigError("--reference accepts only full-tsvd");
  }

  const Tensor3 tensor = read_t3b(a.input);
  mf.input(a.input);
  cfg.validate(tensor.rows(), tensor.cols());
  mf.doc["config"] = {{"k", cfg.k},          {"m", cfg.m},
                      {"mode", lower(a.mode)}, {"aug", lower(a.aug)},
                      {"delta", cfg.delta},  {"max_restarts", cfg.max_restarts},
                      {"seed", a.seed ? json(*a.seed) : json(nullptr)},
                      {"reference", a.reference}};

  const SolverResult res = tlbr_solve(tensor, cfg);

  const fs::path out = a.out;
  fs::create_directories(out / "triplets");
  write_t3b(res.triplets.U, out / "triplets" / "U.t3b");
  write_t3b(res.triplets.S(), out / "triplets" / "S.t3b");
  write_t3b(res.triplets.V, out / "triplets" / "V.t3b");
  for (const char* f : {"U.t3b", "S.t3b", "V.t3b"}) mf.output(out / "triplets" / f);
  {
    std::ofstream h = open_out(out / "history.csv");
    res.history.write_csv(h);
    mf.output(out / "history.csv");
  }
  {
    std::ofstream s = open_out(out / "triplets.csv");
    s << "triplet_index,sigma,residual_bound,converged\n";
    for (Index i = 0; i < res.triplets.size(); ++i) {
      s << i + 1 << ',' << num(res.triplets.sigma[i]) << ',' << num(res.triplets.residual[i])
        << ',' << (res.triplets.converged[i] ? 1 : 0) << '\n';
    }
    mf.output(out / "triplets.csv");
  }
  if (!a.reference.empty()) {
    const TSVD full = t_svd(tensor);
    const Index r = full.rank();
    std::ofstream e = open_out(out / "reference_errors.csv");
    e << "triplet_index,reference_index,tube_error\n";
    for (Index i = 0; i < res.triplets.size(); ++i) {
      const Index ref = cfg.mode == Mode::Largest ? i : r - 1 - i;
      e << i + 1 << ',' << ref + 1 << ',' << num(fnorm(res.triplets.s[i] - full.tube(ref)))
        << '\n';
    }
    mf.output(out / "reference_errors.csv");
  }
  mf.doc["result"] = {{"converged", res.converged},
                      {"iterations", res.iterations},
                      {"operator_applications", res.operator_applications},
                      {"harmonic_restarts", res.harmonic_restarts},
                      {"ritz_fallbacks", res.ritz_fallbacks}};
  mf.write(out);
  std::printf("%s after %zu iteration(s); sigma:", res.converged ? "converged" : "NOT converged",
              static_cast<std::size_t>(res.iterations));
  for (double s : res.triplets.sigma) std::printf(" %.10g", s);
  std::printf("\n");
  return res.converged ? kOk : kNotConverged;
}

// ---- compress --------------------------------------------------------------

struct CompressArgs {
  std::string image;
  std::string ks = "5,10,15,25";
  std::string method = "tlbr";
  Index m = 0;
  double delta = 1e-8;
  std::optional<std::uint64_t> seed;
  std::string out = "tlbr_out";
};

int run_compress(const CompressArgs& a, Manifest& mf) {
  const std::vector<Index> ks = parse_index_list(a.ks);
  std::vector<std::pair<std::string, CompressMethod>> methods;
  const std::string method = lower(a.method);
  if (method == "tlbr" || method == "both") methods.push_back({"tlbr", CompressMethod::Tlbr});
  if (method == "tsvd" || method == "both") methods.push_back({"tsvd", CompressMethod::FullTsvd});
  if (methods.empty()) throw ConfigError("--method must be tlbr, tsvd or both");

  const ImageTensor img = load_image(a.image);
  mf.input(a.image);
  mf.doc["config"] = {{"k", a.ks}, {"method", method}, {"m", a.m}, {"delta", a.delta},
                      {"seed", a.seed ? json(*a.seed) : json(nullptr)}};
  CompressOptions opts;
  opts.m = a.m;
  opts.delta = a.delta;
  opts.seed = a.seed;

  const fs::path out = a.out;
  fs::create_directories(out);
  std::ofstream csv = open_out(out / "relerr.csv");
  csv << "k,method,rel_error,iterations,converged\n";
  bool all_converged = true;
  const std::string stem = fs::path(a.image).stem().string();
  for (const auto& [name, m] : methods) {
    for (Index k : ks) {
      const Compressed c = compress(img.data, k, m, opts);
      all_converged = all_converged && c.converged;
      const fs::path png = out / (stem + "_" + name + "_k" + std::to_string(k) + ".png");
      save_image(c.approx, png);
      mf.output(png);
      csv << k << ',' << name << ',' << num(c.rel_error) << ',' << c.iterations << ','
          << (c.converged ? 1 : 0) << '\n';
      std::printf("%s k=%zu rel_error=%.6e\n", name.c_str(), static_cast<std::size_t>(k),
                  c.rel_error);
    }
  }
  csv.close();
  mf.output(out / "relerr.csv");
  mf.write(out);
  return all_converged ? kOk : kNotConverged;
}

// ---- recognize -------------------------------------------------------------

struct RecognizeArgs {
  std::string train_dir;
  Index holdout = 3;
  Index k = 10;
  Index m = 20;
  double delta = 1e-8;
  std::uint64_t seed = 0;
  std::string probe;
  bool evaluate = false;
  std::string out = "tlbr_out";
};

int run_recognize(const RecognizeArgs& a, Manifest& mf) {
  if (!a.probe.empty() && a.evaluate) throw ConfigError("use either --probe or --evaluate");
  const FaceSplit split = build_face_db(a.train_dir, a.holdout, a.seed);
  for (Index i = 0; i < split.db.size(); ++i) mf.input(split.db.sources[i]);
  for (const auto& t : split.test) mf.input(t.source);
  mf.doc["config"] = {{"holdout", a.holdout}, {"k", a.k}, {"m", a.m},
                      {"delta", a.delta},     {"seed", a.seed}, {"probe", a.probe}};

  TrainOptions topts;
  topts.delta = a.delta;
  topts.seed = a.seed;
  const ProjectionBasis basis = train_basis(split.db, a.k, a.m, topts);

  const fs::path out = a.out;
  fs::create_directories(out);
  save_basis(basis, out / "basis");
  for (const char* f : {"basis.t3b", "mean.t3b", "gallery.t3b", "meta.json"}) {
    mf.output(out / "basis" / f);
  }

  std::vector<LabeledImage> probes;
  if (!a.probe.empty()) {
    mf.input(a.probe);
    probes.push_back({"", a.probe, load_image(a.probe).data});
  } else {
    probes = split.test;
  }
  std::vector<Match> matches;
  const double rate = identification_rate(basis, probes, &matches);

  std::ofstream csv = open_out(out / "matches.csv");
  csv << "probe,predicted,actual,distance\n";
  Index correct = 0;
  for (Index i = 0; i < probes.size(); ++i) {
    csv << probes[i].source.string() << ',' << matches[i].label << ',' << probes[i].label << ','
        << num(matches[i].distance) << '\n';
    if (matches[i].label == probes[i].label) ++correct;
  }
  csv.close();
  mf.output(out / "matches.csv");
  if (a.probe.empty()) {
    std::ofstream r = open_out(out / "rate.csv");
    r << "k,m,holdout,probes,correct,rate\n";
    r << a.k << ',' << a.m << ',' << a.holdout << ',' << probes.size() << ',' << correct << ','
      << num(rate) << '\n';
    mf.output(out / "rate.csv");
    std::printf("identification rate %.2f%% (%zu/%zu)\n", rate, static_cast<std::size_t>(correct),
                probes.size());
  } else {
    std::printf("%s -> %s (distance %.6g)\n", a.probe.c_str(), matches[0].label.c_str(),
                matches[0].distance);
  }
  mf.doc["result"] = {{"rate", rate}, {"probes", probes.size()}};
  mf.write(out);
  return kOk;
}

// ---- bench -----------------------------------------------------------------

struct BenchArgs {
  std::string suite = "table1";
  std::string sizes = "100x100x3";
  std::uint64_t seed = 1;
  Index seeds = 1;
  Index max_restarts = 1000;
  bool force = false;
  std::string out = "tlbr_out";
};

int run_bench(const BenchArgs& a, Manifest& mf) {
  const std::string suite = lower(a.suite);
  if (suite != "table1" && suite != "table2" && suite != "table3" && suite != "table4") {
    throw ConfigError("--suite must be table1, table2, table3 or table4");
  }
  if (a.seeds < 1) throw ConfigError("--seeds must be at least 1");
  const std::vector<Dims> sizes = parse_sizes(a.sizes);
  for (const Dims& d : sizes) guard_size(d, a.force);
  mf.doc["config"] = {{"suite", suite},     {"sizes", a.sizes},
                      {"seed", a.seed},     {"seeds", a.seeds},
                      {"max_restarts", a.max_restarts}, {"force", a.force}};

  const fs::path out = a.out;
  fs::create_directories(out);
  const fs::path path = out / (suite + ".csv");
  std::ofstream csv = open_out(path);
  if (suite == "table1") csv << "size,seed,triplet_index,tube_error,sigma,iterations\n";
  if (suite == "table2") csv << "size,seed,m,iterations,converged\n";
  if (suite == "table3") csv << "size,seed,augmentation,triplet_index,tube_error,converged\n";
  if (suite == "table4") {
    csv << "size,seed,augmentation,iterations,seconds,operator_applications,converged\n";
  }

  bool all_converged = true;
  for (const Dims& d : sizes) {
    for (Index s = 0; s < a.seeds; ++s) {
      const std::uint64_t seed = a.seed + s;
      const Tensor3 tensor = randn_tensor(d.rows, d.cols, d.tubes, seed);
      SolverConfig cfg;
      cfg.k = 4;
      cfg.m = 20;
      cfg.max_restarts = a.max_restarts;
      if (suite == "table1" || suite == "table2") {
        cfg.mode = Mode::Largest;
        cfg.delta = 1e-10;
      } else {
        cfg.mode = Mode::Smallest;
      }

      if (suite == "table1") {
        const SolverResult r = tlbr_solve(tensor, cfg);
        all_converged = all_converged && r.converged;
        const TSVD full = t_svd(tensor);
        for (Index i = 0; i < r.triplets.size(); ++i) {
          csv << d.text() << ',' << seed << ',' << i + 1 << ','
              << num(fnorm(r.triplets.s[i] - full.tube(i))) << ',' << num(r.triplets.sigma[i])
              << ',' << r.iterations << '\n';
        }
      } else if (suite == "table2") {
        for (Index m : {Index{10}, Index{20}}) {
          cfg.m = m;
          const SolverResult r = tlbr_solve(tensor, cfg);
          all_converged = all_converged && r.converged;
          csv << d.text() << ',' << seed << ',' << m << ',' << r.iterations << ','
              << (r.converged ? 1 : 0) << '\n';
        }
      } else {
        const TSVD full = suite == "table3" ? t_svd(tensor) : TSVD{};
        for (Augmentation aug : {Augmentation::Ritz, Augmentation::Harmonic}) {
          cfg.augmentation = aug;
          const std::string name = aug == Augmentation::Ritz ? "ritz" : "harm";
          const auto t0 = std::chrono::steady_clock::now();
          const SolverResult r = tlbr_solve(tensor, cfg);
          const double secs =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          all_converged = all_converged && r.converged;
          if (suite == "table3") {
            const Index rank = full.rank();
            for (Index i = 0; i < r.triplets.size(); ++i) {
              csv << d.text() << ',' << seed << ',' << name << ',' << i + 1 << ','
                  << num(fnorm(r.triplets.s[i] - full.tube(rank - 1 - i))) << ','
                  << (r.converged ? 1 : 0) << '\n';
            }
          } else {
            csv << d.text() << ',' << seed << ',' << name << ',' << r.iterations << ','
                << num(secs) << ',' << r.operator_applications << ',' << (r.converged ? 1 : 0)
                << '\n';
          }
        }
      }
      std::printf("%s %s seed %llu done\n", suite.c_str(), d.text().c_str(),
                  static_cast<unsigned long long>(seed));
    }
  }
  csv.close();
  mf.output(path);
  mf.write(out);
  return all_converged ? kOk : kNotConverged;
}

// ---- gen -------------------------------------------------------------------

struct GenArgs {
  std::string dims = "100x100x3";
  std::string kind = "randn";
  std::uint64_t seed = 1;
  bool force = false;
  std::string out = "tensor.t3b";
};

int run_gen(const GenArgs& a, Manifest& mf) {
  const std::vector<Dims> dims = parse_sizes(a.dims);
  if (dims.size() != 1) throw ConfigError("--dims takes a single size");
  const Dims d = dims[0];
  guard_size(d, a.force);
  Tensor3 t;
  const std::string kind = lower(a.kind);
  if (kind == "randn") {
    t = randn_tensor(d.rows, d.cols, d.tubes, a.seed);
  } else if (kind == "identity") {
    if (d.rows != d.cols) throw ConfigError("identity needs a square size");
    t = identity_tensor(d.rows, d.tubes);
  } else {
    throw ConfigError("--kind must be randn or identity");
  }
  const fs::path out = a.out;
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_t3b(t, out);
  mf.doc["config"] = {{"dims", d.text()}, {"kind", kind}, {"seed", a.seed}};
  mf.output(out);
  std::printf("wrote %s (%s)\n", out.c_str(), d.text().c_str());
  return kOk;
}

// ---- config file -----------------------------------------------------------

// Flat "key = value" lines; '#' starts a comment. Keys are flag names without
// the leading dashes. Returned as argv tokens placed before the user's flags,
// so flags on the command line win.
std::vector<std::string> config_tokens(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::vector<std::string> out;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || key == "config") {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": bad key");
    }
    const std::string v = lower(value);
    if (v == "true" || v == "yes" || v == "on") {
      out.push_back("--" + key);
    } else if (v == "false" || v == "no" || v == "off") {
      continue;
    } else {
      out.push_back("--" + key);
      out.push_back(value);
    }
  }
  return out;
}

// Moves config-file tokens right after the subcommand name.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::optional<std::string> file;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      file = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (!file) return args;
  const auto sub = std::find_if(args.begin() + 1, args.end(), [](const std::string& a) {
    return a == "svd" || a == "compress" || a == "recognize" || a == "bench" || a == "gen";
  });
  if (sub == args.end()) throw ConfigError("--config needs a subcommand");
  const std::vector<std::string> extra = config_tokens(*file);
  args.insert(sub + 1, extra.begin(), extra.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> raw(argv, argv + argc);

  CLI::App app{"Restarted tensor Lanczos bidiagonalization under the t-product"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Cap on worker threads (default: TLBR_THREADS or 1)");
  app.set_version_flag("--version", kVersion);

  auto add_config = [](CLI::App* sub) {
    sub->add_option("--config", "Flat key = value file; flags on the command line win");
  };

  SvdArgs svd;
  CLI::App* c_svd = app.add_subcommand("svd", "Partial t-SVD of a T3B tensor");
  c_svd->add_option("input", svd.input, "Input tensor (.t3b)")->required();
  c_svd->add_option("--k", svd.k, "Number of triplets");
  c_svd->add_option("--m", svd.m, "Bidiagonalization length");
  c_svd->add_option("--mode", svd.mode, "largest | smallest");
  c_svd->add_option("--aug", svd.aug, "ritz | harm");
  c_svd->add_option("--delta", svd.delta, "Acceptance tolerance");
  c_svd->add_option("--max-restarts", svd.max_restarts, "Restart cap");
  c_svd->add_option("--seed", svd.seed, "Seed for the starting slice");
  c_svd->add_option("--reference", svd.reference, "full-tsvd: also write reference_errors.csv");
  c_svd->add_option("--out", svd.out, "Output directory");
  add_config(c_svd);

  CompressArgs cmp;
  CLI::App* c_cmp = app.add_subcommand("compress", "Truncated t-SVD image compression");
  c_cmp->add_option("image", cmp.image, "PNG or JPEG image")->required();
  c_cmp->add_option("--k", cmp.ks, "Comma-separated ranks");
  c_cmp->add_option("--method", cmp.method, "tlbr | tsvd | both");
  c_cmp->add_option("--m", cmp.m, "Bidiagonalization length (0: min(dims, 2k + 10))");
  c_cmp->add_option("--delta", cmp.delta, "Acceptance tolerance");
  c_cmp->add_option("--seed", cmp.seed, "Seed for the starting slice");
  c_cmp->add_option("--out", cmp.out, "Output directory");
  add_config(c_cmp);

  RecognizeArgs rec;
  CLI::App* c_rec = app.add_subcommand("recognize", "Tensor PCA face recognition");
  c_rec->add_option("train_dir", rec.train_dir, "Dataset root with one folder per person")
      ->required();
  c_rec->add_option("--holdout", rec.holdout, "Test images per person");
  c_rec->add_option("--k", rec.k, "Basis size");
  c_rec->add_option("--m", rec.m, "Bidiagonalization length");
  c_rec->add_option("--delta", rec.delta, "Acceptance tolerance");
  c_rec->add_option("--seed", rec.seed, "Split and solver seed");
  c_rec->add_option("--probe", rec.probe, "Identify a single image");
  c_rec->add_flag("--evaluate", rec.evaluate, "Identify the held-out images (default)");
  c_rec->add_option("--out", rec.out, "Output directory");
  add_config(c_rec);

  BenchArgs bench;
  CLI::App* c_bench = app.add_subcommand("bench", "Reproduce the experiment tables");
  c_bench->add_option("--suite", bench.suite, "table1 | table2 | table3 | table4");
  c_bench->add_option("--sizes", bench.sizes, "Comma-separated sizes like 100x100x3");
  c_bench->add_option("--seed", bench.seed, "First seed");
  c_bench->add_option("--seeds", bench.seeds, "Number of consecutive seeds");
  c_bench->add_option("--max-restarts", bench.max_restarts, "Restart cap");
  c_bench->add_flag("--force", bench.force, "Allow sizes above the desk-scale guard");
  c_bench->add_option("--out", bench.out, "Output directory");
  add_config(c_bench);

  GenArgs gen;
  CLI::App* c_gen = app.add_subcommand("gen", "Write a test tensor");
  c_gen->add_option("--dims", gen.dims, "Size like 100x100x3");
  c_gen->add_option("--kind", gen.kind, "randn | identity");
  c_gen->add_option("--seed", gen.seed, "Seed");
  c_gen->add_flag("--force", gen.force, "Allow sizes above the desk-scale guard");
  c_gen->add_option("--out", gen.out, "Output file");
  add_config(c_gen);

  try {
    std::vector<std::string> args = expand_config(raw);
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfig;
  }
  if (threads > 0) set_thread_limit(threads);

  CLI::App* sub = app.get_subcommands().front();
  Manifest mf(sub->get_name(), raw);
  try {
    if (sub == c_svd) return run_svd(svd, mf);
    if (sub == c_cmp) return run_compress(cmp, mf);
    if (sub == c_rec) return run_recognize(rec, mf);
    if (sub == c_bench) return run_bench(bench, mf);
    return run_gen(gen, mf);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfig;
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfig;
  } catch (const IndexOutOfRange& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIo;
  }
}
