#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace iouf {

// Number of worker threads used for replica loops.  0 means hardware
// concurrency.  Results never depend on this value.
void set_worker_threads(unsigned n);
unsigned worker_threads();

// Evaluates f(0..count-1) on a small thread pool and returns the results in
// index order, so any reduction over them is deterministic.  The first
// exception thrown by a task is rethrown after all workers stop.
template <class F>
auto parallel_map(std::size_t count, F&& f) -> std::vector<decltype(f(std::size_t{0}))> {
  using R = decltype(f(std::size_t{0}));
  std::vector<R> out(count);
  const unsigned nthreads =
      static_cast<unsigned>(std::min<std::size_t>(worker_threads(), std::max<std::size_t>(count, 1)));
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = f(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        out[i] = f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        next.store(count);
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
  return out;
}

}  // namespace iouf
