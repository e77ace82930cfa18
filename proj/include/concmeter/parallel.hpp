#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace concmeter {

/// Process-wide worker count used by parallel_for (0 selects hardware concurrency).
void set_worker_count(unsigned workers);
unsigned worker_count();

/// Overrides the worker count for the calling thread while alive. Used when
/// independent jobs already run on a pool and inner loops should stay serial.
class ScopedWorkerCount {
 public:
  explicit ScopedWorkerCount(unsigned workers);
  ~ScopedWorkerCount();
  ScopedWorkerCount(const ScopedWorkerCount&) = delete;
  ScopedWorkerCount& operator=(const ScopedWorkerCount&) = delete;

 private:
  unsigned previous_;
};

namespace detail {
unsigned effective_workers();
}

/// Runs body(i) for i in [0, count). Work is split into contiguous blocks; the
/// body must only write to per-index outputs so results never depend on the
/// number of workers.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(detail::effective_workers(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const std::size_t block = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * block;
    const std::size_t end = std::min(count, begin + block);
    if (begin >= end) break;
    threads.emplace_back([&, begin, end] {
      ScopedWorkerCount serial(1);
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace concmeter
