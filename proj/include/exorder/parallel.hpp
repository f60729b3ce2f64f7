#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace exorder {

// Worker count from EXORDER_WORKERS, else 1.
inline unsigned default_workers() {
  const char* s = std::getenv("EXORDER_WORKERS");
  if (!s || !*s) return 1;
  try {
    long v = std::stol(s);
    return v < 1 ? 1u : static_cast<unsigned>(std::min<long>(v, 256));
  } catch (...) {
    return 1;
  }
}

// Calls fn(i) for i in [0, n). Results must be written by index so the outcome does not
// depend on scheduling. The first exception is rethrown after every worker stops.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  unsigned w = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  for (unsigned t = 0; t < w; ++t) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace exorder
