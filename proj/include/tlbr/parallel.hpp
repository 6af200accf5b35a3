#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace tlbr {

/// Upper bound on worker threads used by frame-parallel kernels.
///
/// Defaults to the value of the `TLBR_THREADS` environment variable, or 1 when
/// it is unset. Results never depend on this value: frames are independent and
/// each one is always computed by exactly one thread.
std::size_t thread_limit();
void set_thread_limit(std::size_t threads);

/// Runs `fn(i)` for i in [0, count). `work` is a rough flop estimate for the
/// whole batch; small batches stay on the calling thread.
template <typename Fn>
void parallel_for(std::size_t count, double work, Fn&& fn) {
  const std::size_t limit = thread_limit();
  if (limit <= 1 || count <= 1 || work < 2.0e5) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t workers = limit < count ? limit : count;
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) fn(i);
    });
  }
  for (std::size_t i = 0; i < count; i += workers) fn(i);
  for (auto& t : pool) t.join();
}

}  // namespace tlbr
