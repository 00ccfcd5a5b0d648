#ifndef MSRATE_SRC_RNG_H
#define MSRATE_SRC_RNG_H

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>

namespace msrate::detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Unbiased draw in [0, n). std::uniform_int_distribution output differs
// between standard libraries, which would break cross-platform determinism.
inline std::size_t uniform_below(std::mt19937_64& rng, std::size_t n) {
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  const auto bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = kMax - kMax % bound;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return static_cast<std::size_t>(draw % bound);
}

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_below(rng, i)]);
}

}  // namespace msrate::detail

#endif  // MSRATE_SRC_RNG_H
