#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace vdamp {

/// SplitMix64 finaliser (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: draw k of stream `seed` is
/// mix64(seed ^ mix64(k)). Any draw can be recomputed from (seed, k) alone,
/// which keeps paths bitwise reproducible across platforms and threads.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

  std::uint64_t bits(std::uint64_t counter) const noexcept { return mix64(seed_ ^ mix64(counter)); }

  /// Uniform in the open interval (0, 1).
  double uniform(std::uint64_t counter) const noexcept {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal by inverse CDF of uniform(counter).
  double gaussian(std::uint64_t counter) const;

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
};

/// Halton points in [0,1)^dim with a Cranley-Patterson rotation drawn from
/// the seed (seed 0 gives the plain sequence).
class HaltonSequence {
 public:
  HaltonSequence(std::size_t dim, std::uint64_t seed);
  void next(std::span<double> out);

 private:
  std::vector<unsigned> bases_;
  std::vector<double> shift_;
  std::uint64_t index_ = 0;
};

}  // namespace vdamp
