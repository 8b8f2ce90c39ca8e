// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "diolab/float_interval.hpp"
#include "diolab/rational.hpp"
#include "diolab/sieve.hpp"

namespace diolab {

// Prime factorization as (prime, exponent) pairs, primes ascending.
std::vector<std::pair<std::uint64_t, unsigned>> factorize(std::uint64_t n);

// All divisors of n, ascending.
std::vector<std::uint64_t> divisors(std::uint64_t n);

// Euler totient by direct factorization (no tables needed).
std::uint64_t totient_u64(std::uint64_t n);

// sigma_tau(n) = sum over divisors d of n of d^tau, rounded outward.
FloatInterval sigma_tau(std::uint64_t n, const Rational& tau,
                        mpfr_prec_t prec = 128);

// Exact value for integer exponents (negative allowed).
Rational sigma_tau_exact(std::uint64_t n, long tau);

// eta(q) = sum_{d | q} phi(d)/d = prod_{p^e || q} (1 + e(p-1)/p), exact.
// Verifies eta(q) <= d(q) before returning.
Rational eta_gcdsum(std::uint64_t q);

// Certified floor of the divisor-count cutoff 2^{log log x}. Resolving the
// cutoff to an integer turns the defining comparison into an exact one.
Integer kac_threshold(std::uint64_t x);

// Fraction of n <= x whose divisor count stays under the cutoff above.
// Requires x >= 3.
Rational kac_fraction(std::uint64_t x);

// Exact sum_{n<=x} 1/d(n), assembled from tallies of the few distinct
// divisor-count values.
Rational recip_divisor_sum(std::uint64_t x);

// R(x) = (sum_{n<=x} 1/d(n)) * sqrt(log x) / x. The divisor sum is exact;
// only the sqrt(log x) factor is rounded (outward). Requires x >= 3.
FloatInterval recip_divisor_ratio(std::uint64_t x, mpfr_prec_t prec = 128);

// Outward bracket for (sum_{n<=N} phi(n)/n) / N, N <= t.limit.
std::pair<Rational, Rational> totient_ratio_bounds(const SieveTables& t,
                                                   std::uint64_t n);

// Partial-summation comparator. For decreasing f >= 0 and g, h >= 0 whose
// prefix sums agree within factor c at every index, the weighted sums
// sum f*g and sum f*h agree within factor c as well. hypothesis_ok reports
// the prefix-sum condition, conclusion_ok the weighted-sum condition; the
// implication hypothesis -> conclusion is the property under test.
struct ComparatorReport {
  bool hypothesis_ok = false;
  bool conclusion_ok = false;
  Rational sum_fg;
  Rational sum_fh;
};
ComparatorReport compare_weighted_sums(const std::vector<Rational>& f,
                                       const std::vector<Rational>& g,
                                       const std::vector<Rational>& h,
                                       const Rational& c);

}  // namespace diolab
