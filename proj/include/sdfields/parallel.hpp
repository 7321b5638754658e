#pragma once

// Deterministic replica parallelism: work is cut into fixed-size chunks whose
// boundaries do not depend on the thread count; threads claim chunks
// dynamically and every chunk writes its own result slot, so any ordered
// reduction over the slots is independent of the parallelism degree.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sdfields {

inline constexpr std::size_t kReplicaChunk = 512;

/// Calls fn(chunk, begin, end) for every chunk of [0, n).
template <class Fn>
void for_each_chunk(std::size_t n, int threads, Fn&& fn, std::size_t chunk = kReplicaChunk) {
  const std::size_t chunks = (n + chunk - 1) / chunk;
  if (chunks == 0) return;
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, chunks));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&]() {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        fn(c, c * chunk, std::min(n, (c + 1) * chunk));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(chunks);
        return;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace sdfields
