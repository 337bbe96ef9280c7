#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace rwre {

// Runs fn(i) for i in [0, n). Each index writes only its own slot of any
// shared output, so the result is independent of the worker count; reductions
// happen afterwards in index order.
inline void parallel_for(std::int64_t n, int workers,
                         const std::function<void(std::int64_t)>& fn) {
  if (n <= 0) return;
  if (workers <= 1 || n == 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  int k = static_cast<int>(std::min<std::int64_t>(workers, n));
  std::atomic<std::int64_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::mutex error_mu;
  pool.reserve(static_cast<std::size_t>(k));
  for (int t = 0; t < k; ++t) {
    pool.emplace_back([&] {
      while (true) {
        std::int64_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(error_mu);
          if (!failed.exchange(true)) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failed.load() && error) std::rethrow_exception(error);
}

}  // namespace rwre
