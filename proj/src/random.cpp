#include "tlbr/random.hpp"

namespace tlbr {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

Tensor3 randn_tensor(Index rows, Index cols, Index tubes, std::uint64_t seed) {
  Tensor3 out(rows, cols, tubes);
  Rng rng(seed);
  for (double& v : out.data()) v = rng.normal();
  return out;
}

}  // namespace tlbr
