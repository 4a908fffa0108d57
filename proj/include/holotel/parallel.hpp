#pragma once

#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace holotel {

/// Runs chunk_fn(begin, end) over a static partition of [0, n) on `threads`
/// workers. Callers must write results into per-index slots; with that
/// discipline output is identical for any thread count.
inline void parallel_chunks(
    std::int64_t n, int threads,
    const std::function<void(std::int64_t, std::int64_t)>& chunk_fn) {
  if (threads <= 1 || n < 2) {
    if (n > 0) chunk_fn(0, n);
    return;
  }
  const int workers = int(std::min<std::int64_t>(threads, n));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::int64_t step = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::int64_t b = w * step;
    const std::int64_t e = std::min<std::int64_t>(n, b + step);
    if (b >= e) break;
    pool.emplace_back([&chunk_fn, b, e] { chunk_fn(b, e); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace holotel
