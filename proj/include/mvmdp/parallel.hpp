#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <thread>
#include <vector>

namespace mvmdp {

/// Worker count: `requested` if nonzero, else MVMDP_THREADS, else hardware concurrency.
inline unsigned thread_count(unsigned requested = 0) {
  if (requested) return requested;
  if (const char* env = std::getenv("MVMDP_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls body(first, last) on contiguous chunks of [0, count).
template <class Body>
void parallel_chunks(std::size_t count, unsigned threads, Body&& body) {
  threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    body(std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (count + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t first = t * chunk;
    const std::size_t last = std::min(count, first + chunk);
    if (first < last) pool.emplace_back([&body, first, last] { body(first, last); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace mvmdp
