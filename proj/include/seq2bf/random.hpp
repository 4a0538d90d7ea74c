#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace seq2bf {

// mt19937_64's output sequence is fixed by the standard; the helpers below
// avoid the implementation-defined standard distributions so that runs are
// reproducible across standard libraries.
using Rng = std::mt19937_64;

/// Uniform integer in [0, n). n must be positive.
inline uint64_t uniform_index(Rng& rng, uint64_t n) {
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

/// Uniform double in [0, 1).
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <class T>
void shuffle(std::span<T> items, Rng& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    const size_t j = uniform_index(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace seq2bf
