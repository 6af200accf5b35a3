#include "tlbr/t3b_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

#include "tlbr/error.hpp"

namespace tlbr {

namespace {

constexpr std::array<char, 4> kMagic = {'T', '3', 'B', '1'};

static_assert(std::endian::native == std::endian::little,
              "T3B I/O assumes a little-endian host");

void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw IoError("T3B: truncated header");
  return v;
}

}  // namespace

void write_t3b(const Tensor3& t, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, t.rows());
  put_u64(out, t.cols());
  put_u64(out, t.tubes());
  const auto data = t.data();
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!out) throw IoError("T3B: write failed");
}

Tensor3 read_t3b(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw UnsupportedFormat("T3B: bad magic");
  const std::uint64_t rows = get_u64(in);
  const std::uint64_t cols = get_u64(in);
  const std::uint64_t tubes = get_u64(in);
  if (rows == 0 || cols == 0 || tubes == 0) {
    throw UnsupportedFormat("T3B: zero dimension in header");
  }
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / 8;
  if (rows > limit / cols || rows * cols > limit / tubes) {
    throw UnsupportedFormat("T3B: header dimensions overflow");
  }
  const std::uint64_t count = rows * cols * tubes;
  std::vector<double> data;
  // Grow in chunks so a lying header cannot force a huge allocation up front.
  constexpr std::uint64_t kChunk = 1u << 20;
  std::uint64_t done = 0;
  while (done < count) {
    const std::uint64_t take = std::min(kChunk, count - done);
    data.resize(done + take);
    in.read(reinterpret_cast<char*>(data.data() + done),
            static_cast<std::streamsize>(take * sizeof(double)));
    if (static_cast<std::uint64_t>(in.gcount()) != take * sizeof(double)) {
      throw IoError("T3B: truncated payload");
    }
    done += take;
  }
  return Tensor3(rows, cols, tubes, std::move(data));
}

void write_t3b(const Tensor3& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  write_t3b(t, out);
}

Tensor3 read_t3b(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  return read_t3b(in);
}

}  // namespace tlbr
