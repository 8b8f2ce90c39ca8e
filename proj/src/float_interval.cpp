// SPDX-License-Identifier: Apache-2.0
#include "diolab/float_interval.hpp"

#include <algorithm>
#include <vector>

#include "diolab/errors.hpp"

namespace diolab {

FloatInterval::FloatInterval(mpfr_prec_t prec) : lo_(prec), hi_(prec) {
  mpfr_set_zero(lo_.get(), 1);
  mpfr_set_zero(hi_.get(), 1);
}

FloatInterval FloatInterval::from_rational(const Rational& x, mpfr_prec_t prec) {
  FloatInterval r(prec);
  mpfr_set_q(r.lo_.get(), x.get_mpq_t(), MPFR_RNDD);
  mpfr_set_q(r.hi_.get(), x.get_mpq_t(), MPFR_RNDU);
  return r;
}

FloatInterval FloatInterval::from_bounds(const Rational& lo, const Rational& hi,
                                         mpfr_prec_t prec) {
  if (lo > hi) throw UsageError("interval bounds out of order");
  FloatInterval r(prec);
  mpfr_set_q(r.lo_.get(), lo.get_mpq_t(), MPFR_RNDD);
  mpfr_set_q(r.hi_.get(), hi.get_mpq_t(), MPFR_RNDU);
  return r;
}

FloatInterval FloatInterval::from_long(long x, mpfr_prec_t prec) {
  FloatInterval r(prec);
  mpfr_set_si(r.lo_.get(), x, MPFR_RNDD);
  mpfr_set_si(r.hi_.get(), x, MPFR_RNDU);
  return r;
}

FloatInterval FloatInterval::zeta2(mpfr_prec_t prec) {
  FloatInterval r(prec);
  Mpfr pi_lo(prec), pi_hi(prec);
  mpfr_const_pi(pi_lo.get(), MPFR_RNDD);
  mpfr_const_pi(pi_hi.get(), MPFR_RNDU);
  mpfr_sqr(r.lo_.get(), pi_lo.get(), MPFR_RNDD);
  mpfr_sqr(r.hi_.get(), pi_hi.get(), MPFR_RNDU);
  mpfr_div_ui(r.lo_.get(), r.lo_.get(), 6, MPFR_RNDD);
  mpfr_div_ui(r.hi_.get(), r.hi_.get(), 6, MPFR_RNDU);
  return r;
}

FloatInterval FloatInterval::operator+(const FloatInterval& o) const {
  FloatInterval r(std::max(prec(), o.prec()));
  mpfr_add(r.lo_.get(), lo_.get(), o.lo_.get(), MPFR_RNDD);
  mpfr_add(r.hi_.get(), hi_.get(), o.hi_.get(), MPFR_RNDU);
  return r;
}

FloatInterval FloatInterval::operator-(const FloatInterval& o) const {
  FloatInterval r(std::max(prec(), o.prec()));
  mpfr_sub(r.lo_.get(), lo_.get(), o.hi_.get(), MPFR_RNDD);
  mpfr_sub(r.hi_.get(), hi_.get(), o.lo_.get(), MPFR_RNDU);
  return r;
}

FloatInterval FloatInterval::operator*(const FloatInterval& o) const {
  FloatInterval r(std::max(prec(), o.prec()));
  mpfr_srcptr xs[2] = {lo_.get(), hi_.get()};
  mpfr_srcptr ys[2] = {o.lo_.get(), o.hi_.get()};
  Mpfr t(r.prec());
  bool first = true;
  for (auto* x : xs)
    for (auto* y : ys) {
      mpfr_mul(t.get(), x, y, MPFR_RNDD);
      if (first || mpfr_less_p(t.get(), r.lo_.get())) mpfr_set(r.lo_.get(), t.get(), MPFR_RNDD);
      mpfr_mul(t.get(), x, y, MPFR_RNDU);
      if (first || mpfr_greater_p(t.get(), r.hi_.get())) mpfr_set(r.hi_.get(), t.get(), MPFR_RNDU);
      first = false;
    }
  return r;
}

FloatInterval FloatInterval::operator/(const FloatInterval& o) const {
  if (mpfr_sgn(o.lo_.get()) <= 0 && mpfr_sgn(o.hi_.get()) >= 0)
    throw UsageError("interval division by interval containing zero");
  FloatInterval r(std::max(prec(), o.prec()));
  mpfr_srcptr xs[2] = {lo_.get(), hi_.get()};
  mpfr_srcptr ys[2] = {o.lo_.get(), o.hi_.get()};
  Mpfr t(r.prec());
  bool first = true;
  for (auto* x : xs)
    for (auto* y : ys) {
      mpfr_div(t.get(), x, y, MPFR_RNDD);
      if (first || mpfr_less_p(t.get(), r.lo_.get())) mpfr_set(r.lo_.get(), t.get(), MPFR_RNDD);
      mpfr_div(t.get(), x, y, MPFR_RNDU);
      if (first || mpfr_greater_p(t.get(), r.hi_.get())) mpfr_set(r.hi_.get(), t.get(), MPFR_RNDU);
      first = false;
    }
  return r;
}

FloatInterval FloatInterval::operator-() const {
  FloatInterval r(prec());
  mpfr_neg(r.lo_.get(), hi_.get(), MPFR_RNDD);
  mpfr_neg(r.hi_.get(), lo_.get(), MPFR_RNDU);
  return r;
}

FloatInterval FloatInterval::sqrt() const {
  FloatInterval r(prec());
  if (mpfr_sgn(lo_.get()) < 0) throw UsageError("sqrt of interval with negative lower bound");
  mpfr_sqrt(r.lo_.get(), lo_.get(), MPFR_RNDD);
  mpfr_sqrt(r.hi_.get(), hi_.get(), MPFR_RNDU);
  return r;
}

FloatInterval FloatInterval::ln() const {
  if (mpfr_sgn(lo_.get()) <= 0) throw UsageError("log of interval touching zero");
  FloatInterval r(prec());
  mpfr_log(r.lo_.get(), lo_.get(), MPFR_RNDD);
  mpfr_log(r.hi_.get(), hi_.get(), MPFR_RNDU);
  return r;
}

FloatInterval FloatInterval::log_clamped() const {
  FloatInterval r = ln();
  if (mpfr_cmp_ui(r.lo_.get(), 1) < 0) mpfr_set_ui(r.lo_.get(), 1, MPFR_RNDD);
  if (mpfr_cmp_ui(r.hi_.get(), 1) < 0) mpfr_set_ui(r.hi_.get(), 1, MPFR_RNDU);
  return r;
}

FloatInterval FloatInterval::exp2() const {
  FloatInterval r(prec());
  mpfr_exp2(r.lo_.get(), lo_.get(), MPFR_RNDD);
  mpfr_exp2(r.hi_.get(), hi_.get(), MPFR_RNDU);
  return r;
}

FloatInterval FloatInterval::pow_rat(long num, unsigned long den) const {
  if (den == 0) throw UsageError("zero root index");
  if (num == 0) return from_long(1, prec());
  if (mpfr_sgn(lo_.get()) <= 0) throw UsageError("pow_rat needs positive base");
  unsigned long n = static_cast<unsigned long>(num < 0 ? -num : num);
  FloatInterval r(prec());
  Mpfr t(prec());
  mpfr_pow_ui(t.get(), lo_.get(), n, MPFR_RNDD);
  mpfr_rootn_ui(r.lo_.get(), t.get(), den, MPFR_RNDD);
  mpfr_pow_ui(t.get(), hi_.get(), n, MPFR_RNDU);
  mpfr_rootn_ui(r.hi_.get(), t.get(), den, MPFR_RNDU);
  if (num < 0) return r.inverse();
  return r;
}

FloatInterval FloatInterval::inverse() const { return from_long(1, prec()) / *this; }

bool FloatInterval::contains(const Rational& x) const {
  return mpfr_cmp_q(lo_.get(), x.get_mpq_t()) <= 0 && mpfr_cmp_q(hi_.get(), x.get_mpq_t()) >= 0;
}

bool FloatInterval::definitely_lt(const FloatInterval& o) const {
  return mpfr_less_p(hi_.get(), o.lo_.get()) != 0;
}

bool FloatInterval::definitely_le(const Rational& bound) const {
  return mpfr_cmp_q(hi_.get(), bound.get_mpq_t()) <= 0;
}

bool FloatInterval::definitely_ge(const Rational& bound) const {
  return mpfr_cmp_q(lo_.get(), bound.get_mpq_t()) >= 0;
}

Rational FloatInterval::lo_rational() const {
  Rational q;
  mpfr_get_q(q.get_mpq_t(), lo_.get());
  return q;
}

Rational FloatInterval::hi_rational() const {
  Rational q;
  mpfr_get_q(q.get_mpq_t(), hi_.get());
  return q;
}

double FloatInterval::width_approx() const {
  Mpfr t(prec());
  mpfr_sub(t.get(), hi_.get(), lo_.get(), MPFR_RNDU);
  return mpfr_get_d(t.get(), MPFR_RNDU);
}

double FloatInterval::mid_approx() const {
  Mpfr t(prec());
  mpfr_add(t.get(), lo_.get(), hi_.get(), MPFR_RNDN);
  mpfr_div_ui(t.get(), t.get(), 2, MPFR_RNDN);
  return mpfr_get_d(t.get(), MPFR_RNDN);
}

std::string FloatInterval::mid_to_string(int digits) const {
  Mpfr t(prec());
  mpfr_add(t.get(), lo_.get(), hi_.get(), MPFR_RNDN);
  mpfr_div_ui(t.get(), t.get(), 2, MPFR_RNDN);
  std::vector<char> buf(static_cast<std::size_t>(digits) + 64);
  mpfr_snprintf(buf.data(), buf.size(), "%.*R*g", digits, MPFR_RNDN, t.get());
  return std::string(buf.data());
}

}  // namespace diolab
