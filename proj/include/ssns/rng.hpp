#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace ssns {

/// SplitMix64 (Steele, Lea, Flood 2014). Satisfies UniformRandomBitGenerator,
/// so it plugs into the <random> distributions.
///
/// Streams are never shared between tasks. Every independent stream is seeded
/// with derive_seed(base, {k1, k2, ...}), where the keys identify the task
/// (trial index, m, block number...). Results therefore depend only on the
/// keys and never on scheduling.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on the open interval (0, 1), 53 bits.
  double uniform01() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

using Rng = SplitMix64;

/// The SplitMix64 output finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t z);

/// Stable hash of (base, keys...). Used for every per-stream seed.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys);

/// Bit pattern of a double, for hashing real-valued keys such as eps.
std::uint64_t double_bits(double v);

}  // namespace ssns
