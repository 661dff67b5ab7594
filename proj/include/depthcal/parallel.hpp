// License: Apache 2.0. See LICENSE file in root directory.

#pragma once

#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace depthcal {

/// Static range partition across worker threads. Each chunk [chunk_begin,
/// chunk_end) is handed to fn exactly once; results must not depend on the
/// partitioning for callers to stay deterministic.
inline void parallel_for_chunks(
    std::int64_t begin, std::int64_t end, int threads,
    const std::function<void(std::int64_t, std::int64_t)>& fn) {
  const std::int64_t n = end - begin;
  if (n <= 0) return;
  int workers = threads > 0
                    ? threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  if (workers == 1 || n < 2 * workers) {
    fn(begin, end);
    return;
  }
  const std::int64_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const std::int64_t lo = begin + w * chunk;
    if (lo >= end) break;
    const std::int64_t hi = std::min(end, lo + chunk);
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace depthcal
