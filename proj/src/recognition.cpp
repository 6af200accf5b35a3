#include "tlbr/recognition.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <string>

#include <json.hpp>

#include "tlbr/error.hpp"
#include "tlbr/image_io.hpp"
#include "tlbr/parallel.hpp"
#include "tlbr/random.hpp"
#include "tlbr/t3b_io.hpp"

namespace tlbr {

namespace fs = std::filesystem;

namespace {

constexpr const char* kLayout = "column-major-frontal";

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (directories ? e.is_directory() : (e.is_regular_file() && is_image_path(e.path()))) {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Fisher-Yates on the raw engine output, identical on every platform.
void seeded_shuffle(std::vector<fs::path>& v, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = rng.engine()() % i;
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

LateralSlice vectorize_image(const Tensor3& image) {
  const Index len = image.rows() * image.cols();
  std::vector<double> data(image.data().begin(), image.data().end());
  return Tensor3(len, 1, image.tubes(), std::move(data));
}

FaceDatabase make_face_db(const std::vector<LabeledImage>& train) {
  if (train.size() < 2) throw TooFewImages("face database needs at least 2 training images");
  FaceDatabase db;
  db.height = train.front().image.rows();
  db.width = train.front().image.cols();
  const Index len = db.height * db.width;
  const Index n = train.size();
  db.faces = Tensor3(len, n, 3);
  for (Index i = 0; i < n; ++i) {
    const Tensor3& img = train[i].image;
    if (img.rows() != db.height || img.cols() != db.width || img.tubes() != 3) {
      throw InconsistentDims("image " + train[i].source.string() + " is " +
                             std::to_string(img.rows()) + "x" + std::to_string(img.cols()) +
                             "x" + std::to_string(img.tubes()) + ", expected " +
                             std::to_string(db.height) + "x" + std::to_string(db.width) + "x3");
    }
    db.faces.set_lateral(i, vectorize_image(img));
    db.labels.push_back(train[i].label);
    db.sources.push_back(train[i].source);
  }
  db.mean = LateralSlice(len, 1, 3);
  for (Index t = 0; t < 3; ++t) {
    for (Index r = 0; r < len; ++r) {
      double acc = 0.0;
      for (Index i = 0; i < n; ++i) acc += db.faces(r, i, t);
      db.mean(r, 0, t) = acc / static_cast<double>(n);
    }
  }
  db.centered = db.faces;
  for (Index i = 0; i < n; ++i) {
    for (Index t = 0; t < 3; ++t) {
      for (Index r = 0; r < len; ++r) db.centered(r, i, t) -= db.mean(r, 0, t);
    }
  }
  return db;
}

FaceSplit build_face_db(const fs::path& root, Index holdout, std::uint64_t seed) {
  if (!fs::is_directory(root)) throw IoError("dataset root " + root.string() + " is not a directory");
  std::vector<LabeledImage> train;
  FaceSplit split;
  const std::vector<fs::path> people = sorted_entries(root, true);
  for (std::size_t p = 0; p < people.size(); ++p) {
    std::vector<fs::path> files = sorted_entries(people[p], false);
    const std::string label = people[p].filename().string();
    if (files.size() <= holdout) {
      throw TooFewImages("person " + label + " has " + std::to_string(files.size()) +
                         " images, holdout needs more than " + std::to_string(holdout));
    }
    seeded_shuffle(files, mix_seed(seed, p));
    std::sort(files.begin(), files.begin() + static_cast<std::ptrdiff_t>(holdout));
    std::sort(files.begin() + static_cast<std::ptrdiff_t>(holdout), files.end());
    for (std::size_t i = 0; i < files.size(); ++i) {
      LabeledImage li{label, files[i], load_image(files[i]).data};
      (i < holdout ? split.test : train).push_back(std::move(li));
    }
  }
  split.db = make_face_db(train);
  return split;
}

ProjectionBasis train_basis(const FaceDatabase& db, Index k, Index m, const TrainOptions& opts) {
  SolverConfig cfg;
  cfg.k = k;
  cfg.m = m;
  cfg.delta = opts.delta;
  cfg.max_restarts = opts.max_restarts;
  cfg.seed = opts.seed;
  cfg.mode = Mode::Largest;
  const SolverResult res = tlbr_solve(db.centered, cfg);

  ProjectionBasis b;
  b.k = k;
  b.m = m;
  b.height = db.height;
  b.width = db.width;
  b.U = res.triplets.U;
  b.mean = db.mean;
  b.gallery = ifft3(tprod_adjoint(fft3(b.U), fft3(db.centered)));
  b.labels = db.labels;
  for (const auto& s : db.sources) b.sources.push_back(s.string());
  return b;
}

LateralSlice project(const ProjectionBasis& basis, const Tensor3& probe) {
  if (probe.rows() != basis.height || probe.cols() != basis.width || probe.tubes() != 3) {
    throw DimMismatch("probe is " + std::to_string(probe.rows()) + "x" +
                      std::to_string(probe.cols()) + "x" + std::to_string(probe.tubes()) +
                      ", basis expects " + std::to_string(basis.height) + "x" +
                      std::to_string(basis.width) + "x3");
  }
  LateralSlice centered = vectorize_image(probe);
  centered -= basis.mean;
  return ifft3(tprod_adjoint(fft3(basis.U), fft3(centered)));
}

Match identify(const ProjectionBasis& basis, const Tensor3& probe) {
  const LateralSlice p0 = project(basis, probe);
  // Distances this close are rounding noise of equal gallery entries.
  const double tie = 1e-12 * std::max(1.0, fnorm(p0));
  Match best;
  best.distance = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < basis.gallery.cols(); ++i) {
    const double d = fnorm(basis.gallery.lateral(i) - p0);
    if (d < best.distance - tie) {
      best.distance = d;
      best.index = i;
    }
  }
  if (!basis.labels.empty()) best.label = basis.labels[best.index];
  return best;
}

double identification_rate(const ProjectionBasis& basis, const std::vector<LabeledImage>& probes,
                           std::vector<Match>* matches) {
  if (probes.empty()) return 0.0;
  std::vector<Match> found(probes.size());
  const double work = static_cast<double>(basis.U.size()) * basis.k;
  parallel_for(probes.size(), work * static_cast<double>(probes.size()),
               [&](Index i) { found[i] = identify(basis, probes[i].image); });
  Index correct = 0;
  for (Index i = 0; i < probes.size(); ++i) {
    if (found[i].label == probes[i].label) ++correct;
  }
  if (matches != nullptr) *matches = std::move(found);
  return 100.0 * static_cast<double>(correct) / static_cast<double>(probes.size());
}

void save_basis(const ProjectionBasis& basis, const fs::path& dir) {
  fs::create_directories(dir);
  write_t3b(basis.U, dir / "basis.t3b");
  write_t3b(basis.mean, dir / "mean.t3b");
  write_t3b(basis.gallery, dir / "gallery.t3b");
  nlohmann::json meta;
  meta["k"] = basis.k;
  meta["m"] = basis.m;
  meta["height"] = basis.height;
  meta["width"] = basis.width;
  meta["layout"] = kLayout;
  meta["labels"] = basis.labels;
  meta["sources"] = basis.sources;
  meta["mean_file"] = "mean.t3b";
  std::ofstream out(dir / "meta.json");
  if (!out) throw IoError("cannot write " + (dir / "meta.json").string());
  out << meta.dump(2) << '\n';
}

ProjectionBasis load_basis(const fs::path& dir) {
  std::ifstream in(dir / "meta.json");
  if (!in) throw IoError("cannot read " + (dir / "meta.json").string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("meta.json: " + std::string(e.what()));
  }
  if (meta.value("layout", "") != kLayout) {
    throw UnsupportedFormat("basis bundle layout is not " + std::string(kLayout));
  }
  ProjectionBasis b;
  b.k = meta.at("k").get<Index>();
  b.m = meta.at("m").get<Index>();
  b.height = meta.at("height").get<Index>();
  b.width = meta.at("width").get<Index>();
  b.labels = meta.at("labels").get<std::vector<std::string>>();
  b.sources = meta.value("sources", std::vector<std::string>{});
  b.U = read_t3b(dir / "basis.t3b");
  b.mean = read_t3b(dir / meta.value("mean_file", std::string("mean.t3b")));
  b.gallery = read_t3b(dir / "gallery.t3b");
  const Index len = b.height * b.width;
  if (b.U.rows() != len || b.U.cols() != b.k || b.mean.rows() != len ||
      b.gallery.rows() != b.k || b.gallery.cols() != b.labels.size()) {
    throw InconsistentDims("basis bundle files disagree with meta.json");
  }
  return b;
}

}  // namespace tlbr
