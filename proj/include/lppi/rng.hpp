#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace lppi {

// Every random decision in the library draws from an engine keyed by
// (seed, indices...). Replicate r of target t always sees the same stream
// no matter how work is split across threads, which is what makes outputs
// invariant to the worker count.

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Mixes the key words into a single well-scrambled 64-bit value.
inline std::uint64_t mix_keys(std::initializer_list<std::uint64_t> keys) {
  std::uint64_t state = 0x6a09e667f3bcc908ULL;
  for (std::uint64_t k : keys) state = splitmix64(state ^ k);
  return state;
}

// Engine for one logical work item. Seeded through seed_seq so that
// nearby keys do not produce correlated streams.
inline std::mt19937_64 substream(std::initializer_list<std::uint64_t> keys) {
  std::uint64_t s = mix_keys(keys);
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(splitmix64(s)),
                    static_cast<std::uint32_t>(splitmix64(s) >> 32)};
  return std::mt19937_64(seq);
}

// Unbiased draw from {0, ..., n-1} by rejection, spelled out here so the
// stream does not depend on the standard library's distribution internals.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t limit = ~0ULL - ~0ULL % n;
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return static_cast<std::size_t>(v % n);
}

}  // namespace lppi
