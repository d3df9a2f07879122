#pragma once

// Minimal data-parallel helpers. Work is cut into fixed-size chunks that are
// claimed atomically by worker threads; reductions combine the per-chunk
// partials in chunk order, so results are bit-identical for any thread count.

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace cellmap {

inline constexpr std::size_t kParallelChunk = 8192;

inline unsigned worker_count(std::size_t n) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t chunks = (n + kParallelChunk - 1) / kParallelChunk;
  return static_cast<unsigned>(std::min<std::size_t>(hw, std::max<std::size_t>(1, chunks)));
}

// Calls fn(begin, end) over disjoint chunks covering [0, n).
template <typename ChunkFn>
void parallel_for_chunks(std::size_t n, ChunkFn&& fn) {
  if (n == 0) return;
  const std::size_t num_chunks = (n + kParallelChunk - 1) / kParallelChunk;
  const unsigned workers = worker_count(n);

  if (workers == 1) {
    for (std::size_t c = 0; c < num_chunks; ++c)
      fn(c * kParallelChunk, std::min(n, (c + 1) * kParallelChunk));
    return;
  }

  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t c = next.fetch_add(1); c < num_chunks; c = next.fetch_add(1))
      fn(c * kParallelChunk, std::min(n, (c + 1) * kParallelChunk));
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
}

// Element-wise variant of parallel_for_chunks.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  parallel_for_chunks(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
  });
}

/// Order-stable reduction: accumulate(partial, i) fills per-chunk partials,
// combine(total, partial) folds them in ascending chunk order.
template <typename T, typename AccumulateFn, typename CombineFn>
T parallel_reduce(std::size_t n, T init, AccumulateFn&& accumulate, CombineFn&& combine) {
  const std::size_t num_chunks = (n + kParallelChunk - 1) / kParallelChunk;
  std::vector<T> partials(num_chunks, init);
  parallel_for_chunks(n, [&](std::size_t begin, std::size_t end) {
    T& partial = partials[begin / kParallelChunk];
    for (std::size_t i = begin; i < end; ++i) accumulate(partial, i);
  });
  T total = init;
  for (const T& partial : partials) combine(total, partial);
  return total;
}

}  // namespace cellmap
