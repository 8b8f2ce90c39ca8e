// SPDX-License-Identifier: Apache-2.0
#include "diolab/quad.hpp"

#include <cmath>

namespace diolab {

namespace {
long merged_radicand(long lhs_d, bool lhs_rat, long rhs_d, bool rhs_rat) {
  if (lhs_rat) return rhs_rat ? 0 : rhs_d;
  if (rhs_rat) return lhs_d;
  if (lhs_d != rhs_d) throw UsageError("mixed radicands in quadratic arithmetic");
  return lhs_d;
}
}  // namespace

Quad::Quad(Rational a, Rational b, long d) : a_(std::move(a)), b_(std::move(b)), d_(d) {
  if (d_ < 0) throw UsageError("negative radicand");
  if (b_ != 0) {
    if (d_ == 0) {
      b_ = 0;  // sqrt(0) term vanishes
    } else if (is_perfect_square(Integer(d_))) {
      throw UsageError("radicand must be nonsquare");
    }
  }
}

Quad Quad::operator+(const Quad& o) const {
  long d = merged_radicand(d_, is_rational(), o.d_, o.is_rational());
  return Quad(a_ + o.a_, b_ + o.b_, d);
}

Quad Quad::operator-(const Quad& o) const {
  long d = merged_radicand(d_, is_rational(), o.d_, o.is_rational());
  return Quad(a_ - o.a_, b_ - o.b_, d);
}

Quad Quad::operator*(const Quad& o) const {
  long d = merged_radicand(d_, is_rational(), o.d_, o.is_rational());
  return Quad(a_ * o.a_ + b_ * o.b_ * d, a_ * o.b_ + b_ * o.a_, d);
}

Quad Quad::operator/(const Rational& r) const {
  if (r == 0) throw UsageError("division by zero");
  return Quad(a_ / r, b_ / r, d_);
}

Quad Quad::inverse() const {
  if (is_rational()) {
    if (a_ == 0) throw UsageError("inverse of zero");
    return Quad(1 / a_);
  }
  Rational norm = a_ * a_ - b_ * b_ * d_;
  // norm == 0 would force sqrt(d) rational; d is nonsquare, so norm != 0.
  return Quad(a_ / norm, -b_ / norm, d_);
}

int Quad::sign() const {
  int sa = sgn(a_), sb = sgn(b_);
  if (sb == 0) return sa;
  if (sa == 0) return sb;
  if (sa == sb) return sa;
  // Opposite signs: compare a^2 against b^2 d.
  Rational lhs = a_ * a_, rhs = b_ * b_ * Rational(d_);
  int s = ::cmp(lhs, rhs);
  return sa > 0 ? s : -s;
}

Quad Quad::pow(unsigned long e) const {
  Quad result(Rational(1));
  Quad base = *this;
  while (e > 0) {
    if (e & 1) result = result * base;
    base = base * base;
    e >>= 1;
  }
  return result;
}

Integer Quad::floor() const {
  if (is_rational()) return floor_rat(a_);
  Integer la = a_.get_den(), lb = b_.get_den();
  Integer l;
  mpz_lcm(l.get_mpz_t(), la.get_mpz_t(), lb.get_mpz_t());
  Integer big_a = a_.get_num() * (l / la);
  Integer big_b = b_.get_num() * (l / lb);
  // value = (big_a + big_b*sqrt(d)) / l with l > 0
  Integer rad = big_b * big_b * Integer(d_);
  Integer u = isqrt(rad);
  Integer numer_floor;
  if (sgn(big_b) > 0) {
    numer_floor = big_a + u;  // big_b*sqrt(d) in (u, u+1); d nonsquare
  } else {
    numer_floor = big_a - u - 1;  // -|b|sqrt(d) in (-u-1, -u)
  }
  Integer q;
  mpz_fdiv_q(q.get_mpz_t(), numer_floor.get_mpz_t(), l.get_mpz_t());
  return q;
}

std::pair<Rational, Rational> Quad::enclosure(unsigned bits) const {
  if (is_rational()) return {a_, a_};
  Integer scale = pow_int(2, bits);
  Integer s = isqrt(Integer(d_) * scale * scale);
  Rational root_lo = make_rational(s, scale);
  Rational root_hi = make_rational(s + 1, scale);
  Rational lo, hi;
  if (sgn(b_) >= 0) {
    lo = a_ + b_ * root_lo;
    hi = a_ + b_ * root_hi;
  } else {
    lo = a_ + b_ * root_hi;
    hi = a_ + b_ * root_lo;
  }
  return {lo, hi};
}

double Quad::approx() const {
  return a_.get_d() + b_.get_d() * std::sqrt(static_cast<double>(d_));
}

}  // namespace diolab
