// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "diolab/gamma_value.hpp"
#include "diolab/interval_set.hpp"
#include "diolab/rational.hpp"

namespace diolab {

// Per-q rational approximation of the target offset:
// gcd(A, B) = 1, 1 <= B <= sqrt(q), and |gamma - A/B| <= err_bound with
// err_bound^2 B^2 q < 1 (the squared form keeps the sqrt(q) comparison
// exact).
struct SchmidtApprox {
  long q = 1;
  Integer A;
  Integer B = 1;
  Rational err_bound;
};

// Convergent with the largest denominator B <= sqrt(q). One always exists;
// the certification refines bracket inputs as needed and throws
// PrecisionError if the cap is reached first.
SchmidtApprox dirichlet_reduce(const GammaValue& gamma, long q);

// Residues a in {0..q-1} with gcd(a B + A, q) = 1, sorted.
struct SqSet {
  long q = 1;
  std::vector<long> members;
};

// Exact gcd scan. Requires red.q == q and gcd(A, B) = 1; the returned set
// always has at least phi(q) members.
SqSet build_Sq(long q, const SchmidtApprox& red);

// Union over a in S(q) of arcs ((a + gamma - psi_q)/q, (a + gamma + psi_q)/q)
// on the circle; measure exactly #S(q) * 2 psi_q / q for psi_q <= 1/2.
CircleIntervalSet build_Aq_prime(long q, const Rational& psi_q,
                                 const Rational& gamma);

// Outer approximation for surd or bracket targets: the returned set contains
// the true one and its measure is within measure_error of #S(q) * 2 psi_q / q.
TargetSetResult build_Aq_prime_outer(long q, const Rational& psi_q,
                                     const GammaValue& gamma,
                                     unsigned prec_bits = 128);

// D*_n = max_i max(|x_i - (i-1)/n|, |x_i - i/n|) over sorted points in [0,1).
Rational star_discrepancy(const std::vector<Rational>& points);

}  // namespace diolab
