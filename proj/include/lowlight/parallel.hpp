#pragma once

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace lowlight {

namespace parallel_detail {
inline std::atomic<int>& max_threads_slot() {
  static std::atomic<int> slot{0};
  return slot;
}
}  // namespace parallel_detail

/// Caps worker threads used by parallel_for; 0 means hardware concurrency.
inline void set_max_threads(int n) { parallel_detail::max_threads_slot() = std::max(0, n); }

inline int max_threads() {
  const int n = parallel_detail::max_threads_slot();
  if (n > 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [begin, end) over contiguous chunks of at least
/// min_chunk indices. Each index is handled by exactly one thread, so writes
/// to disjoint outputs stay deterministic.
template <class Fn>
void parallel_for(int begin, int end, Fn&& fn, int min_chunk = 1) {
  const int n = end - begin;
  if (n <= 0) return;
  const int workers = std::min(max_threads(), std::max(1, n / std::max(1, min_chunk)));
  if (workers <= 1) {
    for (int i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    const int lo = begin + static_cast<int>(static_cast<long long>(n) * t / workers);
    const int hi = begin + static_cast<int>(static_cast<long long>(n) * (t + 1) / workers);
    pool.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
}

}  // namespace lowlight
