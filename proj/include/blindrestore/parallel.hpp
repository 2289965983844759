#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace br {

// Process-wide cap on worker threads. Results never depend on the value:
// parallel work is partitioned into fixed chunks and all reductions happen
// in chunk order on the calling thread.
inline std::atomic<int>& max_threads_slot() {
  static std::atomic<int> n{0};  // 0 = hardware concurrency
  return n;
}

inline void set_max_threads(int n) { max_threads_slot().store(n); }

inline int max_threads() {
  int n = max_threads_slot().load();
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  return n > 0 ? n : 1;
}

// Runs fn(i) for i in [begin, end); each index must touch disjoint state.
template <class Fn>
void parallel_for(int begin, int end, const Fn& fn) {
  const int n = end - begin;
  if (n <= 0) return;
  const int threads = std::min(max_threads(), n);
  if (threads <= 1) {
    for (int i = begin; i < end; ++i) fn(i);
    return;
  }
  std::atomic<int> next{begin};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= end) return;
        fn(i);
      }
    });
  for (auto& th : pool) th.join();
}

}  // namespace br
