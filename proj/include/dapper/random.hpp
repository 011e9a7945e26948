#pragma once

#include <cstdint>
#include <random>

namespace dapper {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-mode derivation: block `i` of the stream keyed on (seed, a, b).
inline constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                                      std::uint64_t i = 0) {
  std::uint64_t h = splitmix64(seed ^ 0x5851f42d4c957f2dULL);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ (b * 0xd6e8feb86659fd93ULL));
  return splitmix64(h ^ (i + 1) * 0x2545f4914f6cdd1dULL);
}

// Stream ids so independent consumers of one experiment seed never overlap.
enum class Stream : std::uint64_t {
  Cipher = 1,
  Para = 2,
  Hydra = 3,
  Comet = 4,
  Workload = 5,
  Corunner = 6,
  Agent = 7,
  Fuzz = 8,
};

inline std::mt19937_64 make_rng(std::uint64_t seed, Stream s, std::uint64_t sub = 0) {
  return std::mt19937_64(derive(seed, std::uint64_t(s), sub));
}

}  // namespace dapper
