#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "recgraph/types.hpp"

namespace recgraph {

/// Runs f(i) for i in [begin, end) on up to `threads` workers. Each index is
/// claimed exactly once, so bodies that write only to slot i are
/// deterministic regardless of the worker count. The first exception thrown
/// by any body is rethrown on the calling thread.
template <typename F>
void parallel_for(Index begin, Index end, int threads, F&& f) {
  const Index count = end - begin;
  if (count <= 0) return;
  if (threads <= 1 || count == 1) {
    for (Index i = begin; i < end; ++i) f(i);
    return;
  }
  const int workers = static_cast<int>(std::min<Index>(threads, count));
  std::atomic<Index> cursor{begin};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&]() {
    for (;;) {
      const Index i = cursor.fetch_add(1);
      if (i >= end) return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

inline int hardware_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace recgraph
