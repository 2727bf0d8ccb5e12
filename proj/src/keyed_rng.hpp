#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace segstab::detail {

// mt19937_64 seeded through seed_seq from a tuple of keys. Both algorithms are
// fully specified by the standard, so the streams are portable.
inline std::mt19937_64 keyed_engine(std::initializer_list<std::uint64_t> keys) {
  std::vector<std::uint32_t> words;
  for (auto k : keys) {
    words.push_back(static_cast<std::uint32_t>(k));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

// Uniform double in [0, 1) from the top 53 bits.
inline double unit_uniform(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline constexpr std::uint64_t kErosionTag = 0x65726f6465ull;
inline constexpr std::uint64_t kJitterTag = 0x6a6974746572ull;

}  // namespace segstab::detail
