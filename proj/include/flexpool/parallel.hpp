#pragma once

// Static-partition parallel loop. Each index is handled by exactly one thread
// and writes only its own outputs, so results do not depend on the thread count.

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "flexpool/errors.hpp"

namespace flexpool {

/// FLEXPOOL_THREADS if set, otherwise 1.
inline unsigned default_threads() {
  if (const char* env = std::getenv("FLEXPOOL_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw ConfigError(std::string("FLEXPOOL_THREADS must be a positive integer, got '") + env + "'");
    return static_cast<unsigned>(v);
  }
  return 1;
}

/// Calls f(i) for i in [0, n). The first exception thrown by any worker is rethrown.
template <class F>
void parallel_for(std::ptrdiff_t n, unsigned threads, F&& f) {
  if (n <= 0) return;
  const auto t = static_cast<std::ptrdiff_t>(std::max(1u, threads));
  if (t == 1 || n == 1) {
    for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
    return;
  }
  const std::ptrdiff_t workers = std::min(t, n);
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (std::ptrdiff_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::ptrdiff_t i = w; i < n; i += workers) f(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace flexpool
