#pragma once

#include <cstdint>
#include <random>

namespace qpop {

/// splitmix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for run `index` of an ensemble started from `master`.
///
/// seed = mix64(mix64(master) ^ (index * 0xd1b54a32d192ed03)). Counter based, so
/// any subset of runs can be reproduced independently of the others.
constexpr std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(mix64(master) ^ (index * 0xd1b54a32d192ed03ULL));
}

/// A single-owner stream of pseudo-random numbers (64-bit Mersenne twister).
class RandomStream {
 public:
  using engine_type = std::mt19937_64;

  explicit RandomStream(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform double in [0, 1) built from the top 53 bits of one engine output.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  engine_type& engine() noexcept { return engine_; }

 private:
  engine_type engine_;
};

}  // namespace qpop
