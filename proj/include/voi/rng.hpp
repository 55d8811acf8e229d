#pragma once

#include <cstdint>
#include <random>

namespace voi::rng {

using Engine = std::mt19937_64;

/// Named random streams. Every random quantity in a run is drawn from an
/// engine seeded by derive_seed(master, stream, index), so results do not
/// depend on how work is scheduled across threads.
enum class Stream : std::uint64_t {
  Prior = 1,
  Outer = 2,
  Dataset = 3,
  Posterior = 4,
  QuantileDataset = 5,
  QuantilePosterior = 6,
  Pairing = 7,
  Study = 8,
  Psa = 9,
  Bootstrap = 10,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// seed = mix(mix(mix(master) ^ stream * golden) + index)
constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                                    std::uint64_t index) noexcept {
  const auto tagged =
      splitmix64(master) ^ (static_cast<std::uint64_t>(stream) * 0x9E3779B97F4A7C15ULL);
  return splitmix64(splitmix64(tagged) + index);
}

inline Engine make_engine(std::uint64_t master, Stream stream, std::uint64_t index) {
  return Engine(derive_seed(master, stream, index));
}

}  // namespace voi::rng
