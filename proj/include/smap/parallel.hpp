#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace smap {

/// Runs body(i) for i in [begin, end) on up to hardware_concurrency threads.
/// Work is split into contiguous static chunks, so any body that writes only
/// to slot i produces identical results regardless of thread count.
template <typename Body>
void parallel_for(int begin, int end, Body&& body, unsigned max_threads = 0) {
  const int count = end - begin;
  if (count <= 0) return;
  unsigned threads = max_threads ? max_threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(count));
  if (threads <= 1) {
    for (int i = begin; i < end; ++i) body(i);
    return;
  }

  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    const int lo = begin + static_cast<int>(static_cast<long long>(count) * t / threads);
    const int hi = begin + static_cast<int>(static_cast<long long>(count) * (t + 1) / threads);
    pool.emplace_back([&, lo, hi] {
      try {
        for (int i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace smap
