#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>

#include <unistd.h>

#include "tlbr/image_io.hpp"

namespace tlbr::fixture {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("tlbr_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Tensor3 smooth_image(Index height, Index width, std::uint64_t seed, double noise) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  Tensor3 img(height, width, 3);
  for (Index c = 0; c < 3; ++c) {
    double amp[4], fx[4], fy[4], ph[4];
    for (int t = 0; t < 4; ++t) {
      amp[t] = 0.1 + 0.15 * u(gen);
      fx[t] = 0.5 + 3.0 * u(gen);
      fy[t] = 0.5 + 3.0 * u(gen);
      ph[t] = 2.0 * std::numbers::pi * u(gen);
    }
    for (Index i = 0; i < height; ++i) {
      for (Index j = 0; j < width; ++j) {
        double v = 0.5;
        for (int t = 0; t < 4; ++t) {
          v += amp[t] * std::cos(std::numbers::pi * (fx[t] * i / height + fy[t] * j / width) + ph[t]);
        }
        img(i, j, c) = std::clamp(v + noise * z(gen), 0.0, 1.0);
      }
    }
  }
  return img;
}

std::vector<LabeledImage> clustered_faces(Index persons, Index per_person, Index height,
                                          Index width, std::uint64_t seed, double jitter) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<LabeledImage> out;
  for (Index p = 0; p < persons; ++p) {
    const Tensor3 proto = smooth_image(height, width, seed * 1000 + p, 0.0);
    for (Index i = 0; i < per_person; ++i) {
      Tensor3 img = proto;
      for (double& v : img.data()) v = std::clamp(v + jitter * z(gen), 0.0, 1.0);
      const std::string label = "p" + std::to_string(p);
      out.push_back({label, label + "_" + std::to_string(i) + ".png", std::move(img)});
    }
  }
  return out;
}

void write_dataset(const std::vector<LabeledImage>& faces, const fs::path& root) {
  for (const auto& f : faces) {
    fs::create_directories(root / f.label);
    save_image(f.image, root / f.label / f.source.filename());
  }
}

}  // namespace tlbr::fixture
