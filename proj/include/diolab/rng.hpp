// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string_view>

#include "diolab/rational.hpp"

namespace diolab {

// SplitMix64 finalizer: a fixed, well-known bijective mixer.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Named, seeded, counter-based random stream. at(i) depends only on
// (seed, name, i): evaluation order and thread count cannot change a draw,
// so every experiment is reproducible from its seed alone.
class SeededStream {
 public:
  SeededStream(std::uint64_t seed, std::string_view name)
      : base_(splitmix64(seed ^ fnv1a(name))) {}

  std::uint64_t at(std::uint64_t i) const { return splitmix64(base_ + 0x632be59bd9b4e019ULL * (i + 1)); }

  std::uint32_t u32_at(std::uint64_t i) const { return static_cast<std::uint32_t>(at(i) >> 32); }

  // Uniform rational in [0,1) with denominator 2^32.
  Rational unit_rational_at(std::uint64_t i) const {
    Rational r(static_cast<unsigned long>(u32_at(i)), 1UL);
    Rational out;
    mpq_div_2exp(out.get_mpq_t(), r.get_mpq_t(), 32);
    return out;
  }

  // Uniform integer in [1, n].
  std::uint64_t index_at(std::uint64_t i, std::uint64_t n) const { return at(i) % n + 1; }

 private:
  std::uint64_t base_;
};

}  // namespace diolab
