// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace diolab {

// Multiplicative-function tables filled by a linear sieve.
//
// Valid indices are 1..limit; entry 0 is a zero filler. spf[1] = 1 by
// convention (1 has no prime factor).
struct SieveTables {
  std::uint64_t limit = 0;
  std::vector<std::uint32_t> phi;
  std::vector<std::uint16_t> d;
  std::vector<std::int8_t> mobius;
  std::vector<std::uint32_t> spf;

  bool is_prime(std::uint64_t n) const { return n >= 2 && spf[n] == n; }
};

// Linear sieve, O(n) time and memory. n = 0 yields empty tables.
SieveTables sieve(std::uint64_t n);

// Streams (n, d(n)) for 1 <= n <= x in increasing order without holding
// per-n tables, for ranges past the comfortable linear-sieve size. Segment
// length is a tuning knob; results do not depend on it.
void stream_divisor_counts(
    std::uint64_t x,
    const std::function<void(std::uint64_t n, std::uint32_t d)>& fn,
    std::uint64_t segment = std::uint64_t{1} << 20);

}  // namespace diolab
