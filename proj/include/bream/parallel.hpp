#pragma once

#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace bream {

/// Runs fn(i) for i in [0, count) on up to `threads` workers with a static
/// block partition. Callers write results into preallocated per-index
/// slots and reduce sequentially afterwards, so thread count never
/// changes results. The first exception thrown by any worker is rethrown.
inline void parallel_for(int count, int threads,
                         const std::function<void(int)>& fn) {
  if (count <= 0) return;
  if (threads <= 1 || count == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  int workers = std::min(threads, count);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  int chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      int lo = w * chunk;
      int hi = std::min(count, lo + chunk);
      try {
        for (int i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace bream
