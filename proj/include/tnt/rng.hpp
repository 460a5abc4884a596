#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace tnt {

// All randomness in the library goes through these helpers instead of
// std::*_distribution, whose output is implementation-defined. Results are
// therefore reproducible for a given seed independent of the standard library.
using Rng = std::mt19937_64;

inline std::uint64_t next_below(Rng& rng, std::uint64_t n) {
  // Lemire-style multiply-shift; bias is < 2^-64 per draw, irrelevant here.
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(rng()) * n) >> 64);
}

inline double next_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
void shuffle_indices(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(next_below(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace tnt
