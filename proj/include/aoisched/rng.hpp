#pragma once

#include <cstdint>
#include <random>

namespace aoisched {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent generator for (seed, stream). Streams depend only on their key, so
/// work split across threads reproduces the serial result.
inline Rng substream(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t a = splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
  const std::uint64_t b = splitmix64(a);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

}  // namespace aoisched
