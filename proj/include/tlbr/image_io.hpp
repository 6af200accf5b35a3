#pragma once

#include <filesystem>

#include "tlbr/tensor.hpp"

namespace tlbr {

/// RGB image as a height x width x 3 tensor with entries in [0, 1].
struct ImageTensor {
  Tensor3 data;
  std::filesystem::path source;
  int bit_depth = 8;

  Index height() const { return data.rows(); }
  Index width() const { return data.cols(); }
};

/// Reads PNG or JPEG by content. Grayscale files throw UnsupportedFormat; an
/// alpha channel is dropped.
ImageTensor load_image(const std::filesystem::path& path);

/// Writes PNG or JPEG by extension (.png, .jpg, .jpeg). Values are clamped
/// to [0, 1] and rounded to 8 bits.
void save_image(const Tensor3& image, const std::filesystem::path& path, int jpeg_quality = 95);

/// True for .png/.jpg/.jpeg, case-insensitive.
bool is_image_path(const std::filesystem::path& path);

}  // namespace tlbr
