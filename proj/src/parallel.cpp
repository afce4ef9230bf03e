// SPDX-License-Identifier: Apache-2.0

#include "eqprop/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace eqprop {

namespace {
std::atomic<unsigned> g_threads{1};
} // namespace

void set_thread_count(unsigned n) noexcept { g_threads.store(std::max(1u, n)); }

unsigned thread_count() noexcept { return g_threads.load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)> &fn) {
  const std::size_t workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      fn(i);
    return;
  }
  std::exception_ptr first;
  std::mutex guard;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = n * w / workers;
      const std::size_t end = n * (w + 1) / workers;
      pool.emplace_back([&, begin, end] {
        try {
          for (std::size_t i = begin; i < end; ++i)
            fn(i);
        } catch (...) {
          std::lock_guard lock(guard);
          if (!first)
            first = std::current_exception();
        }
      });
    }
  }
  if (first)
    std::rethrow_exception(first);
}

} // namespace eqprop
