#pragma once

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace cellboard {

namespace detail {
inline int& thread_setting() {
  static int n = 0;
  return n;
}
}  // namespace detail

// Worker count used by the enumeration and sweep engines. 0 means one per
// logical core.
inline void set_thread_count(int n) { detail::thread_setting() = std::max(0, n); }

inline int thread_count() {
  const int n = detail::thread_setting();
  if (n > 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(chunk) for chunk in [0, chunks) on the worker pool. Callers keep
// per-chunk results and reduce them in chunk order, so results do not depend
// on scheduling.
template <class Fn>
void parallel_chunks(int chunks, Fn&& fn) {
  const int workers = std::min(thread_count(), chunks);
  if (workers <= 1) {
    for (int c = 0; c < chunks; ++c) fn(c);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int c = next++; c < chunks; c = next++) fn(c);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace cellboard
