#include "concmeter/parallel.hpp"

#include <atomic>

namespace concmeter {

namespace {
std::atomic<unsigned> g_workers{0};
thread_local unsigned t_override = 0;
}  // namespace

void set_worker_count(unsigned workers) { g_workers.store(workers); }

unsigned worker_count() {
  const unsigned w = g_workers.load();
  if (w != 0) return w;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

ScopedWorkerCount::ScopedWorkerCount(unsigned workers) : previous_(t_override) {
  t_override = workers;
}

ScopedWorkerCount::~ScopedWorkerCount() { t_override = previous_; }

namespace detail {
unsigned effective_workers() { return t_override != 0 ? t_override : worker_count(); }
}  // namespace detail

}  // namespace concmeter
