#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace spikeline {

// Splits [0, count) into contiguous shards and runs fn(begin, end) on each.
// Shards never overlap, so callers that write disjoint rows need no locking.
template <typename Fn>
void parallel_for_ranges(std::size_t count, unsigned workers, Fn&& fn) {
  workers = std::max(1u, workers);
  if (workers == 1 || count < 2) {
    fn(std::size_t{0}, count);
    return;
  }
  const std::size_t shards = std::min<std::size_t>(workers, count);
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(shards);
  threads.reserve(shards);
  for (std::size_t s = 0; s < shards; ++s) {
    const std::size_t begin = count * s / shards;
    const std::size_t end = count * (s + 1) / shards;
    threads.emplace_back([&, s, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[s] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline unsigned default_workers() {
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace spikeline
