#pragma once

// Fixed-order parallel evaluation. Work is split into chunks whose
// boundaries depend only on the item count, so reductions are bit-identical
// for any worker count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace slelqg {

inline constexpr std::size_t kReduceChunk = 64;

/// Calls body(i) for i in [0, n) on up to `workers` threads.
template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body) {
  const std::size_t n_chunks = (n + kReduceChunk - 1) / kReduceChunk;
  const unsigned threads =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1U, workers), std::max<std::size_t>(n_chunks, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto run = [&] {
    for (;;) {
      const std::size_t chunk = next.fetch_add(1);
      if (chunk >= n_chunks) return;
      const std::size_t end = std::min(n, (chunk + 1) * kReduceChunk);
      try {
        for (std::size_t i = chunk * kReduceChunk; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n_chunks);
        return;
      }
    }
  };

  if (threads <= 1) {
    run();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(run);
  }
  if (failure) std::rethrow_exception(failure);
}

/// Evaluates fn(i) into slot i.
template <class Result, class Fn>
std::vector<Result> parallel_map(std::size_t n, unsigned workers, Fn&& fn) {
  std::vector<Result> out(n);
  parallel_for(n, workers, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

/// Reduces fn(i) over [0, n): items are folded into per-chunk accumulators
/// in index order, then chunks are merged left to right.
template <class Acc, class Fn>
Acc chunked_reduce(std::size_t n, unsigned workers, Fn&& fn) {
  const std::size_t n_chunks = (n + kReduceChunk - 1) / kReduceChunk;
  std::vector<Acc> partial(n_chunks);
  parallel_for(n_chunks * kReduceChunk, workers, [&](std::size_t i) {
    if (i < n) fn(i, partial[i / kReduceChunk]);
  });
  Acc total;
  for (const Acc& p : partial) total.merge(p);
  return total;
}

}  // namespace slelqg
