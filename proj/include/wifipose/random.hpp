#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <utility>

namespace wifipose::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Uniform integer in [0, bound) by rejection; identical on every standard library.
inline std::size_t bounded(std::mt19937_64& gen, std::size_t bound) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t b = bound;
  const std::uint64_t limit = kMax - kMax % b;
  std::uint64_t r;
  do {
    r = gen();
  } while (r >= limit);
  return static_cast<std::size_t>(r % b);
}

/// Fisher-Yates with `bounded`, so permutations are portable (std::shuffle is not).
template <typename T>
void shuffle(std::span<T> v, std::mt19937_64& gen) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[bounded(gen, i)]);
}

}  // namespace wifipose::rng
