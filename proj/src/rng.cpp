#include "ssns/rng.hpp"

#include <bit>

namespace ssns {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix64(base + 0x9e3779b97f4a7c15ULL);
  for (std::uint64_t k : keys) {
    h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
  }
  return h;
}

std::uint64_t double_bits(double v) {
  if (v == 0.0) v = 0.0;  // fold -0
  return std::bit_cast<std::uint64_t>(v);
}

}  // namespace ssns
