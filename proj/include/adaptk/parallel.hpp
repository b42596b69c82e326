#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace adaptk {

namespace detail {
inline std::atomic<std::size_t>& thread_limit() {
  static std::atomic<std::size_t> limit{0};
  return limit;
}
}  // namespace detail

// Upper bound on worker threads used by parallel loops. 0 selects
// std::thread::hardware_concurrency(). Results never depend on this value.
inline void set_thread_count(std::size_t threads) { detail::thread_limit() = threads; }

inline std::size_t thread_count() {
  const std::size_t limit = detail::thread_limit();
  if (limit != 0) return limit;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// Runs body(i) for i in [0, n). Each index is visited exactly once; bodies
// must only write state owned by their index. The first exception thrown by
// any body is rethrown on the calling thread.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  const std::size_t workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace adaptk
