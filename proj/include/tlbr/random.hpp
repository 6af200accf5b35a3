#pragma once

#include <cstdint>
#include <random>

#include "tlbr/tensor.hpp"

namespace tlbr {

/// splitmix64 step, used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double normal() { return dist_(engine_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

/// Standard-normal tensor.
Tensor3 randn_tensor(Index rows, Index cols, Index tubes, std::uint64_t seed);

}  // namespace tlbr
