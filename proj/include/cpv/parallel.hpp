#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <optional>
#include <thread>
#include <vector>

namespace cpv {

// Worker count: CPV_THREADS when set to a positive integer, otherwise the
// hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("CPV_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Smallest i in [0, n) with pred(i) true. The answer does not depend on the
// number of workers; small ranges run inline.
template <class Pred>
std::optional<std::size_t> find_first(std::size_t n, Pred pred) {
  constexpr std::size_t kInline = 1 << 14;
  unsigned workers = std::min<std::size_t>(worker_count(), n / kInline + 1);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      if (pred(i)) return i;
    return std::nullopt;
  }
  constexpr std::size_t kChunk = 1 << 10;
  std::atomic<std::size_t> next_chunk{0};
  std::atomic<std::size_t> best{n};
  auto work = [&] {
    while (true) {
      std::size_t begin = next_chunk.fetch_add(1) * kChunk;
      if (begin >= n || begin >= best.load()) return;
      std::size_t end = std::min(n, begin + kChunk);
      for (std::size_t i = begin; i < end; ++i) {
        if (pred(i)) {
          std::size_t cur = best.load();
          while (i < cur && !best.compare_exchange_weak(cur, i)) {
          }
          break;
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (best.load() == n) return std::nullopt;
  return best.load();
}

}  // namespace cpv
