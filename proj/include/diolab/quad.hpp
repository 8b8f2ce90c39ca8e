// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>

#include "diolab/rational.hpp"

namespace diolab {

// Exact value a + b*sqrt(d) with rational a, b and a fixed nonsquare radicand
// d >= 0. d == 0 encodes a plain rational. Closed under +, -, *, inverse, so
// every comparison and floor below is exact integer arithmetic; no rounding.
class Quad {
 public:
  Quad() : a_(0), b_(0), d_(0) {}
  explicit Quad(Rational a) : a_(std::move(a)), b_(0), d_(0) {}
  Quad(Rational a, Rational b, long d);

  const Rational& a() const { return a_; }
  const Rational& b() const { return b_; }
  long d() const { return d_; }
  bool is_rational() const { return b_ == 0; }

  Quad operator-() const { return Quad(-a_, -b_, d_); }
  Quad operator+(const Quad& o) const;
  Quad operator-(const Quad& o) const;
  Quad operator*(const Quad& o) const;
  Quad operator+(const Rational& r) const { return Quad(a_ + r, b_, d_); }
  Quad operator-(const Rational& r) const { return Quad(a_ - r, b_, d_); }
  Quad operator*(const Rational& r) const { return Quad(a_ * r, b_ * r, d_); }
  Quad operator/(const Rational& r) const;

  // 1/x for x != 0: (a - b*sqrt(d)) / (a^2 - b^2 d).
  Quad inverse() const;

  int sign() const;
  int cmp(const Quad& o) const { return (*this - o).sign(); }
  int cmp(const Rational& r) const { return (*this - r).sign(); }
  bool operator<(const Quad& o) const { return cmp(o) < 0; }
  bool operator==(const Quad& o) const { return cmp(o) == 0; }

  Quad abs() const { return sign() < 0 ? -*this : *this; }
  Quad pow(unsigned long e) const;

  Integer floor() const;
  // Fractional part: *this - floor(), in [0,1).
  Quad mod1() const { return *this - Rational(floor()); }

  // Outward rational bounds with hi - lo <= (|b|+1) * 2^-bits.
  std::pair<Rational, Rational> enclosure(unsigned bits) const;

  double approx() const;

 private:
  Rational a_, b_;
  long d_;
};

}  // namespace diolab
