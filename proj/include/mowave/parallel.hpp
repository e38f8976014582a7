#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mowave {

/// Worker count for parallel sweeps: MOWAVE_THREADS if set, else the
/// hardware concurrency.
unsigned worker_count();

/// Run `body(i)` for i in [0, n). Iterations must be independent; results
/// therefore do not depend on the worker count. The first exception thrown
/// by any iteration is rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(n, std::max(1u, worker_count())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace mowave
