#include "tlbr/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace tlbr {
namespace {

std::size_t env_threads() {
  const char* env = std::getenv("TLBR_THREADS");
  if (env == nullptr) return 1;
  try {
    const long value = std::stol(env);
    return value > 0 ? static_cast<std::size_t>(value) : 1;
  } catch (...) {
    return 1;
  }
}

std::atomic<std::size_t>& limit_slot() {
  static std::atomic<std::size_t> slot{env_threads()};
  return slot;
}

}  // namespace

std::size_t thread_limit() { return limit_slot().load(); }

void set_thread_limit(std::size_t threads) {
  limit_slot().store(threads == 0 ? 1 : threads);
}

}  // namespace tlbr
