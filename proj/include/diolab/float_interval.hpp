// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <mpfr.h>

#include <string>
#include <utility>

#include "diolab/rational.hpp"

namespace diolab {

// RAII wrapper for a single mpfr_t.
class Mpfr {
 public:
  explicit Mpfr(mpfr_prec_t prec = 128) { mpfr_init2(v_, prec); }
  Mpfr(const Mpfr& o) {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_set(v_, o.v_, MPFR_RNDN);
  }
  Mpfr(Mpfr&& o) noexcept {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_swap(v_, o.v_);
  }
  Mpfr& operator=(Mpfr o) noexcept {
    mpfr_swap(v_, o.v_);
    return *this;
  }
  ~Mpfr() { mpfr_clear(v_); }

  mpfr_ptr get() { return v_; }
  mpfr_srcptr get() const { return v_; }
  mpfr_prec_t prec() const { return mpfr_get_prec(v_); }

 private:
  mpfr_t v_;
};

// Closed interval [lo, hi] of MPFR floats with outward rounding on every
// operation. A verdict derived from an interval ("definitely less", ...) is
// rigorous; when the interval straddles the question the caller must refine
// or answer "unknown". Default working precision 128 bits (>= 64 fractional
// bits everywhere these appear in reports).
class FloatInterval {
 public:
  explicit FloatInterval(mpfr_prec_t prec = 128);

  static FloatInterval from_rational(const Rational& x, mpfr_prec_t prec = 128);
  static FloatInterval from_bounds(const Rational& lo, const Rational& hi,
                                   mpfr_prec_t prec = 128);
  static FloatInterval from_long(long x, mpfr_prec_t prec = 128);
  // pi^2/6, outward.
  static FloatInterval zeta2(mpfr_prec_t prec = 128);

  mpfr_prec_t prec() const { return lo_.prec(); }
  const Mpfr& lo() const { return lo_; }
  const Mpfr& hi() const { return hi_; }

  FloatInterval operator+(const FloatInterval& o) const;
  FloatInterval operator-(const FloatInterval& o) const;
  FloatInterval operator*(const FloatInterval& o) const;
  FloatInterval operator/(const FloatInterval& o) const;  // o must not contain 0
  FloatInterval operator-() const;

  FloatInterval sqrt() const;       // requires lo >= 0
  FloatInterval ln() const;         // requires lo > 0
  FloatInterval log_clamped() const;  // max(1, ln x), the log convention
  FloatInterval exp2() const;       // 2^x
  // x^(num/den) for positive x, den >= 1. Monotone, rounded outward.
  FloatInterval pow_rat(long num, unsigned long den) const;
  FloatInterval inverse() const;

  bool contains(const Rational& x) const;
  bool definitely_lt(const FloatInterval& o) const;  // hi < o.lo
  bool definitely_le(const Rational& bound) const;
  bool definitely_ge(const Rational& bound) const;
  int sign_lo() const { return mpfr_sgn(lo_.get()); }
  int sign_hi() const { return mpfr_sgn(hi_.get()); }

  Rational lo_rational() const;
  Rational hi_rational() const;
  double width_approx() const;
  double mid_approx() const;

  // Deterministic decimal rendering of the midpoint.
  std::string mid_to_string(int digits) const;

 private:
  Mpfr lo_, hi_;
};

}  // namespace diolab
