#pragma once

#include <filesystem>
#include <iosfwd>

#include "tlbr/tensor.hpp"

namespace tlbr {

// T3B layout: "T3B1", rows/cols/tubes as little-endian u64, then the
// entries as little-endian doubles in Tensor3 storage order.

void write_t3b(const Tensor3& t, const std::filesystem::path& path);
Tensor3 read_t3b(const std::filesystem::path& path);

void write_t3b(const Tensor3& t, std::ostream& out);
Tensor3 read_t3b(std::istream& in);

}  // namespace tlbr
