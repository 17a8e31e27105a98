#pragma once

// Thread-pool-free parallel loop with static partitioning. Work items are
// split into contiguous ranges per worker; callers that need deterministic
// reductions merge per-range buffers in index order after the join.

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace splatfit {

inline int default_thread_count() {
  if (const char* env = std::getenv("SPLATFIT_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs fn(i) for i in [0, n) across `threads` workers (0 = default count).
/// Indices are assigned round-robin, which balances spatially clustered
/// workloads (e.g. image tiles around a centered subject).
template <typename Fn>
void parallel_for(std::int64_t n, Fn&& fn, int threads = 0) {
  if (n <= 0) return;
  if (threads <= 0) threads = default_thread_count();
  threads = static_cast<int>(std::min<std::int64_t>(threads, n));
  if (threads == 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([t, threads, n, &fn] {
      for (std::int64_t i = t; i < n; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace splatfit
