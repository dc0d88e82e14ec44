#include "khess/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace khess {

namespace {

std::atomic<int>& configured() {
  static std::atomic<int> value{0};
  return value;
}

int from_environment() {
  if (const char* env = std::getenv("KHESS_WORKERS")) {
    try {
      const int v = std::stoi(env);
      if (v >= 1) return v;
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

int worker_count() {
  const int c = configured().load();
  return c > 0 ? c : from_environment();
}

void set_worker_count(int workers) { configured().store(std::max(1, workers)); }

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(worker_count());
  if (workers <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t nthreads = std::min(workers, count);
  std::vector<std::exception_ptr> errors(nthreads);
  std::vector<std::thread> threads;
  threads.reserve(nthreads);
  // Static contiguous chunks.
  for (std::size_t t = 0; t < nthreads; ++t) {
    const std::size_t lo = count * t / nthreads;
    const std::size_t hi = count * (t + 1) / nthreads;
    threads.emplace_back([&, t, lo, hi] {
      for (std::size_t i = lo; i < hi; ++i) {
        try {
          fn(i);
        } catch (...) {
          errors[t] = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  for (std::size_t t = 0; t < nthreads; ++t) {
    if (errors[t]) std::rethrow_exception(errors[t]);
  }
}

}  // namespace khess
