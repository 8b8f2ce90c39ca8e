// SPDX-License-Identifier: Apache-2.0
#include "diolab/sieve.hpp"

#include <cstdint>

#include "diolab/errors.hpp"

namespace diolab {

SieveTables sieve(std::uint64_t n) {
  if (n > (std::uint64_t{1} << 31)) {
    throw UsageError("sieve limit too large for in-memory tables");
  }
  SieveTables t;
  t.limit = n;
  t.phi.assign(n + 1, 0);
  t.d.assign(n + 1, 0);
  t.mobius.assign(n + 1, 0);
  t.spf.assign(n + 1, 0);
  if (n == 0) return t;

  t.phi[1] = 1;
  t.d[1] = 1;
  t.mobius[1] = 1;
  t.spf[1] = 1;

  // cnt[i] = exponent of spf[i] in i; drives the d recurrence.
  std::vector<std::uint8_t> cnt(n + 1, 0);
  std::vector<std::uint32_t> primes;
  for (std::uint64_t i = 2; i <= n; ++i) {
    if (t.spf[i] == 0) {
      t.spf[i] = static_cast<std::uint32_t>(i);
      t.phi[i] = static_cast<std::uint32_t>(i - 1);
      t.d[i] = 2;
      t.mobius[i] = -1;
      cnt[i] = 1;
      primes.push_back(static_cast<std::uint32_t>(i));
    }
    for (std::uint32_t p : primes) {
      if (p > t.spf[i] || i * p > n) break;
      std::uint64_t m = i * p;
      t.spf[m] = p;
      if (p == t.spf[i]) {
        t.phi[m] = t.phi[i] * p;
        // (cnt[i]+1) divides d[i] exactly: it is the spf factor of d[i].
        t.d[m] = static_cast<std::uint16_t>(
            std::uint32_t{t.d[i]} / (cnt[i] + 1u) * (cnt[i] + 2u));
        t.mobius[m] = 0;
        cnt[m] = static_cast<std::uint8_t>(cnt[i] + 1);
        break;
      }
      t.phi[m] = t.phi[i] * (p - 1);
      t.d[m] = static_cast<std::uint16_t>(2u * t.d[i]);
      t.mobius[m] = static_cast<std::int8_t>(-t.mobius[i]);
      cnt[m] = 1;
    }
  }
  return t;
}

void stream_divisor_counts(
    std::uint64_t x,
    const std::function<void(std::uint64_t, std::uint32_t)>& fn,
    std::uint64_t segment) {
  if (x == 0) return;
  if (segment == 0) segment = 1;

  std::uint64_t root = 0;
  while ((root + 1) * (root + 1) <= x) ++root;
  std::vector<std::uint64_t> primes;
  {
    std::vector<bool> comp(root + 1, false);
    for (std::uint64_t p = 2; p <= root; ++p) {
      if (comp[p]) continue;
      primes.push_back(p);
      for (std::uint64_t m = p * p; m <= root; m += p) comp[m] = true;
    }
  }

  std::vector<std::uint64_t> rem;
  std::vector<std::uint32_t> dc;
  for (std::uint64_t lo = 1; lo <= x; lo += segment) {
    std::uint64_t hi = lo + segment - 1;
    if (hi > x || hi < lo) hi = x;
    std::size_t len = static_cast<std::size_t>(hi - lo + 1);
    rem.assign(len, 0);
    dc.assign(len, 1);
    for (std::size_t j = 0; j < len; ++j) rem[j] = lo + j;
    for (std::uint64_t p : primes) {
      if (p * p > hi) break;
      std::uint64_t first = ((lo + p - 1) / p) * p;
      for (std::uint64_t m = first; m <= hi; m += p) {
        std::size_t j = static_cast<std::size_t>(m - lo);
        std::uint32_t e = 0;
        while (rem[j] % p == 0) {
          rem[j] /= p;
          ++e;
        }
        dc[j] *= e + 1;
      }
    }
    for (std::size_t j = 0; j < len; ++j) {
      if (rem[j] > 1) dc[j] *= 2;
      fn(lo + j, dc[j]);
    }
  }
}

}  // namespace diolab
