#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tlbr/restart.hpp"

namespace tlbr {

struct LabeledImage {
  std::string label;
  std::filesystem::path source;
  Tensor3 image;  // height x width x 3
};

/// Training images as lateral slices of a (height * width) x N x 3 tensor,
/// each frontal slice vectorized column-major.
struct FaceDatabase {
  Index height = 0;
  Index width = 0;
  Tensor3 faces;      // raw slices
  LateralSlice mean;  // (height * width) x 1 x 3
  Tensor3 centered;   // faces minus mean
  std::vector<std::string> labels;
  std::vector<std::filesystem::path> sources;

  Index size() const { return labels.size(); }
};

struct FaceSplit {
  FaceDatabase db;
  std::vector<LabeledImage> test;
};

/// Vectorized slice of an image, (height * width) x 1 x 3.
LateralSlice vectorize_image(const Tensor3& image);

/// Throws TooFewImages for fewer than 2 images and InconsistentDims when the
/// image sizes differ.
FaceDatabase make_face_db(const std::vector<LabeledImage>& train);

/// Reads root/<label>/*.{png,jpg,jpeg}. Labels and files are visited in sorted
/// order; `holdout` images per person, chosen by a seeded shuffle, go to the
/// test set. Throws TooFewImages when a person has <= holdout images.
FaceSplit build_face_db(const std::filesystem::path& root, Index holdout, std::uint64_t seed);

struct ProjectionBasis {
  Index k = 0;
  Index m = 0;
  Index height = 0;
  Index width = 0;
  Tensor3 U;        // (height * width) x k x 3, orthonormal
  LateralSlice mean;
  Tensor3 gallery;  // k x N x 3, U^H * centered
  std::vector<std::string> labels;
  std::vector<std::string> sources;
};

struct TrainOptions {
  double delta = 1e-8;
  Index max_restarts = 200;
  std::uint64_t seed = 0;
};

/// Dominant k left slices of the centered faces via the restarted solver.
/// Requires 1 <= k < m <= min(height * width, N).
ProjectionBasis train_basis(const FaceDatabase& db, Index k, Index m,
                            const TrainOptions& opts = {});

/// U^H * (vectorized probe - mean), k x 1 x 3.
LateralSlice project(const ProjectionBasis& basis, const Tensor3& probe);

struct Match {
  std::string label;
  Index index = 0;
  double distance = 0.0;
};

/// Nearest gallery entry in the projected space; ties (distances within
/// 1e-12 * max(1, ||projected probe||)) go to the lowest index. Throws
/// DimMismatch when the probe size differs from training.
Match identify(const ProjectionBasis& basis, const Tensor3& probe);

/// Percentage of probes whose match carries the probe's label; 0 for an
/// empty set.
double identification_rate(const ProjectionBasis& basis, const std::vector<LabeledImage>& probes,
                           std::vector<Match>* matches = nullptr);

/// Bundle layout: basis.t3b, mean.t3b, gallery.t3b, meta.json.
void save_basis(const ProjectionBasis& basis, const std::filesystem::path& dir);
ProjectionBasis load_basis(const std::filesystem::path& dir);

}  // namespace tlbr
