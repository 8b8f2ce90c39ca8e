// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "diolab/float_interval.hpp"
#include "diolab/rational.hpp"

namespace diolab {

// Exact outward fixed-point accumulator at scale 2^-sbits. Each added term
// contributes floor(x*2^S) to the lower leg and ceil(x*2^S) to the upper, so
// [lo, hi] always brackets the true sum and the bracket widens by at most
// 2^-S per term. Integer adds are associative: partial sums merge in any
// order with identical results, which keeps parallel sweeps deterministic.
class FixedPointSum {
 public:
  explicit FixedPointSum(unsigned sbits = 192) : sbits_(sbits) {}

  unsigned sbits() const { return sbits_; }

  void add(const Rational& x) {
    Integer scaled_num;
    mpz_mul_2exp(scaled_num.get_mpz_t(), x.get_num().get_mpz_t(), sbits_);
    Integer q;
    mpz_fdiv_q(q.get_mpz_t(), scaled_num.get_mpz_t(), x.get_den().get_mpz_t());
    lo_ += q;
    mpz_cdiv_q(q.get_mpz_t(), scaled_num.get_mpz_t(), x.get_den().get_mpz_t());
    hi_ += q;
  }

  void add_bounds(const Rational& xlo, const Rational& xhi) {
    Integer scaled_num, q;
    mpz_mul_2exp(scaled_num.get_mpz_t(), xlo.get_num().get_mpz_t(), sbits_);
    mpz_fdiv_q(q.get_mpz_t(), scaled_num.get_mpz_t(), xlo.get_den().get_mpz_t());
    lo_ += q;
    mpz_mul_2exp(scaled_num.get_mpz_t(), xhi.get_num().get_mpz_t(), sbits_);
    mpz_cdiv_q(q.get_mpz_t(), scaled_num.get_mpz_t(), xhi.get_den().get_mpz_t());
    hi_ += q;
  }

  void merge(const FixedPointSum& o) {
    lo_ += o.lo_;
    hi_ += o.hi_;
  }

  Rational lo() const { return scaled(lo_); }
  Rational hi() const { return scaled(hi_); }

  FloatInterval to_interval(mpfr_prec_t prec = 128) const {
    return FloatInterval::from_bounds(lo(), hi(), prec);
  }

 private:
  Rational scaled(const Integer& v) const {
    Rational r(v);
    Rational out;
    mpq_div_2exp(out.get_mpq_t(), r.get_mpq_t(), sbits_);
    return out;
  }

  Integer lo_ = 0, hi_ = 0;
  unsigned sbits_;
};

}  // namespace diolab
