#pragma once

#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace lppi {

// Resolves a worker count: explicit request wins, then LOCAL_PPI_JOBS,
// then 1. Worker count never affects results, only wall time.
inline int resolve_jobs(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("LOCAL_PPI_JOBS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

// Runs body(i) for i in [0, n). Items are assigned to workers statically
// (round robin), so each item runs exactly once regardless of scheduling.
// The body must derive any randomness from the item index, not from shared
// state. The first exception thrown by any worker is rethrown here.
inline void parallel_for(std::size_t n, int jobs,
                         const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  if (jobs <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace lppi
