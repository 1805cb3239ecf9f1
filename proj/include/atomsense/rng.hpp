#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace atomsense {

/// Counter-based pseudo-random generator (SplitMix64 run in counter mode).
///
/// The k-th 64-bit output is a fixed avalanche mix of seed + k * gamma, so a
/// stream is fully determined by (seed, counter) and can be replayed or split
/// without carrying hidden state. Gaussian variates come from Box-Muller on
/// the uniform stream; the same seed always reproduces the same sequence.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64() { return mix(seed_ + (counter_++) * kGamma); }

  /// Uniform double in (0, 1]; never returns 0 so log() is safe.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * M_PI * u2;
    spare_ = r * std::sin(phi);
    have_spare_ = true;
    return r * std::cos(phi);
  }

  std::uint64_t seed() const { return seed_; }

  /// Stateless stream-split: seed for substream `index` of `base`.
  /// index 0 maps to the base seed itself.
  static std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    if (index == 0) return base;
    return mix(base + index * kGamma2);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
  static constexpr std::uint64_t kGamma2 = 0xBF58476D1CE4E5B9ull;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace atomsense
