#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace softhad {

// Static block partition of [0, n) over `threads` workers (0 = hardware
// concurrency). Each index is processed exactly once; outputs written to
// disjoint slots stay deterministic regardless of the worker count.
inline void parallel_for(std::size_t n, std::size_t threads,
                         const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::thread::hardware_concurrency();
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  threads = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace softhad
