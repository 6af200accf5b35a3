#pragma once

// Synthetic datasets shared by the unit and acceptance tests.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tlbr/recognition.hpp"

namespace tlbr::fixture {

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Smooth color image (sums of low-frequency cosines) plus small noise, in [0, 1].
Tensor3 smooth_image(Index height, Index width, std::uint64_t seed, double noise = 0.02);

/// `persons` well-separated prototypes, each with `per_person` jittered
/// copies. Labels are "p0", "p1", ...
std::vector<LabeledImage> clustered_faces(Index persons, Index per_person, Index height,
                                          Index width, std::uint64_t seed,
                                          double jitter = 0.02);

/// Writes root/<label>/<label>_<i>.png for every image.
void write_dataset(const std::vector<LabeledImage>& faces, const std::filesystem::path& root);

}  // namespace tlbr::fixture
