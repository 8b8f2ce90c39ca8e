// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <vector>

#include "diolab/errors.hpp"

namespace diolab {

// Exact rational arithmetic. mpq_class keeps values canonical: lowest terms,
// positive denominator. Every operation below is exact; nothing rounds.
using Rational = mpq_class;
using Integer = mpz_class;

inline Rational make_rational(long num, long den) {
  if (den == 0) throw UsageError("rational with zero denominator");
  Rational r(num, den);
  r.canonicalize();
  return r;
}

inline Rational make_rational(const Integer& num, const Integer& den) {
  if (den == 0) throw UsageError("rational with zero denominator");
  Rational r(num, den);
  r.canonicalize();
  return r;
}

inline Integer floor_rat(const Rational& x) {
  Integer q;
  mpz_fdiv_q(q.get_mpz_t(), x.get_num().get_mpz_t(), x.get_den().get_mpz_t());
  return q;
}

inline Integer ceil_rat(const Rational& x) {
  Integer q;
  mpz_cdiv_q(q.get_mpz_t(), x.get_num().get_mpz_t(), x.get_den().get_mpz_t());
  return q;
}

// x reduced into [0,1).
inline Rational mod1(const Rational& x) { return x - Rational(floor_rat(x)); }

// Distance to the nearest integer; the circle metric used throughout.
inline Rational circle_dist(const Rational& x) {
  Rational f = mod1(x);
  Rational g = 1 - f;
  return f <= g ? f : g;
}

inline Integer isqrt(const Integer& n) {
  Integer r;
  mpz_sqrt(r.get_mpz_t(), n.get_mpz_t());
  return r;
}

inline bool is_perfect_square(const Integer& n) {
  return n >= 0 && mpz_perfect_square_p(n.get_mpz_t()) != 0;
}

inline Integer pow_int(const Integer& base, unsigned long e) {
  Integer r;
  mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), e);
  return r;
}

inline Rational pow_rat(const Rational& base, unsigned long e) {
  return Rational(pow_int(base.get_num(), e), pow_int(base.get_den(), e));
}

// 2^e as a rational, e may be negative.
inline Rational pow2_rat(long e) {
  Rational r;
  if (e >= 0) {
    mpq_mul_2exp(r.get_mpq_t(), Rational(1).get_mpq_t(), static_cast<unsigned long>(e));
  } else {
    mpq_div_2exp(r.get_mpq_t(), Rational(1).get_mpq_t(), static_cast<unsigned long>(-e));
  }
  return r;
}

// Accepts "p/q", plain integers, and decimal literals like "0.25" or "-3.5".
Rational parse_rational(const std::string& text);

// Exact sum by pairwise reduction. Sequential accumulation is quadratic in
// the size of the result's denominator; the tree keeps intermediate
// denominators near the lcm of each subrange, so total work stays
// quasi-linear. Empty input sums to 0.
Rational sum_exact(std::vector<Rational> terms);

// Fixed-point decimal rendering: round-half-even at `digits` fractional
// digits. Deterministic; used for the CSV convenience columns.
std::string rational_to_decimal(const Rational& x, int digits);

// Canonical exact rendering: "p" or "p/q".
inline std::string rational_to_string(const Rational& x) { return x.get_str(); }

}  // namespace diolab
