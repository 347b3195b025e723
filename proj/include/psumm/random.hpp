#pragma once

// Platform-stable randomness. std::mt19937_64 output is fixed by the
// standard; the distributions are not, so sampling is done here by hand.

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

#include "psumm/text.hpp"

namespace psumm::rnd {

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, std::string_view salt = {}) {
  return Engine(salt.empty() ? seed : seed ^ text::fnv1a(salt));
}

// Uniform integer in [0, n). n must be > 0.
inline std::uint64_t below(Engine& eng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = eng();
  } while (x >= limit);
  return x % n;
}

// Uniform double in [0, 1).
inline double unit(Engine& eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

template <typename T>
void shuffle(std::vector<T>& v, Engine& eng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(below(eng, i));
    using std::swap;
    swap(v[i - 1], v[j]);
  }
}

}  // namespace psumm::rnd
