#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace siou::rng {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based seed split: the seed of stream `index` under `parent` depends
/// only on the pair, never on evaluation order. Used for per-omega streams
/// (index = bit pattern of omega) and per-chunk streams (index = chunk number).
inline constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(parent) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t derive_seed(std::uint64_t parent, double key) noexcept {
  return derive_seed(parent, std::bit_cast<std::uint64_t>(key));
}

/// Worker count for parallel simulation: SIOU_THREADS when set to a positive
/// integer, otherwise the hardware concurrency. 1 forces serial execution.
inline unsigned default_thread_count() {
  if (const char* env = std::getenv("SIOU_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) {
      return static_cast<unsigned>(v);
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(chunk_index) for chunk_index in [0, n_chunks) over up to `threads`
/// workers. Chunks are handed out statically (worker t takes t, t + threads,
/// ...), so callers that confine writes to per-chunk slots are schedule-free.
template <class Fn>
void for_each_chunk(std::size_t n_chunks, unsigned threads, Fn&& fn) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n_chunks));
  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) {
      fn(c);
    }
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t c = t; c < n_chunks; c += workers) {
        fn(c);
      }
    });
  }
  for (auto& th : pool) {
    th.join();
  }
}

} // namespace siou::rng
