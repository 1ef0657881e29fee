#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace irp {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to turn (seed, tag) pairs into independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  return mix_seed(mix_seed(base) ^ (tag * 0xd1b54a32d192ed03ULL + 1));
}

// FNV-1a over a label, so streams can be keyed by name.
constexpr std::uint64_t seed_tag(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline Rng make_rng(std::uint64_t base, std::string_view stream) {
  return Rng(derive_seed(base, seed_tag(stream)));
}

// Uniform double in [0, 1) built from 53 raw bits. Unlike std::uniform_real_distribution
// this is specified bit-for-bit, so generated scenes do not depend on the standard library.
inline double uniform01(Rng& rng) { return double(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

}  // namespace irp
