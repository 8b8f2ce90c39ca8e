// SPDX-License-Identifier: Apache-2.0
#include "diolab/schmidt.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "diolab/arith_stats.hpp"
#include "diolab/continued_fraction.hpp"
#include "diolab/errors.hpp"

namespace diolab {

namespace {

// Largest certified err_bound with err_bound^2 B^2 q < 1. Exact inputs
// certify in one shot; brackets refine until the squared test passes.
Rational certified_err_bound(const GammaValue& gamma, const Rational& target,
                             const Integer& B, long q) {
  Rational need = Rational(1) / (Rational(B * B) * Rational(q));
  if (const auto* r = std::get_if<Rational>(&gamma)) {
    Rational err = abs(*r - target);
    if (!(err * err < need)) {
      throw std::logic_error("dirichlet_reduce: exact certification failed");
    }
    return err;
  }
  RealEnclosure e = to_enclosure(gamma);
  for (;;) {
    Rational err = std::max(abs(e.lo() - target), abs(e.hi() - target));
    if (err * err < need) return err;
    unsigned b = e.bits();
    if (e.is_exact()) {
      throw std::logic_error("dirichlet_reduce: exact certification failed");
    }
    if (b >= RealEnclosure::kCapBits) {
      throw PrecisionError(
          "dirichlet_reduce: insufficient precision to certify the "
          "approximation");
    }
    e.refine_bits(b >= RealEnclosure::kCapBits / 2 ? RealEnclosure::kCapBits
                                                   : std::max(64u, b * 2));
  }
}

}  // namespace

SchmidtApprox dirichlet_reduce(const GammaValue& gamma, long q) {
  if (q < 1) throw UsageError("dirichlet_reduce: q must be positive");
  auto conv = cf_convergents(gamma, isqrt(Integer(q)));
  // The first convergent (floor(gamma), 1) always qualifies.
  const auto& [A, B] = conv.back();
  SchmidtApprox red;
  red.q = q;
  red.A = A;
  red.B = B;
  red.err_bound = certified_err_bound(gamma, Rational(A) / Rational(B), B, q);
  return red;
}

SqSet build_Sq(long q, const SchmidtApprox& red) {
  if (q < 1) throw UsageError("build_Sq: q must be positive");
  if (red.q != q) throw UsageError("build_Sq: reduction belongs to another q");
  Integer g;
  mpz_gcd(g.get_mpz_t(), red.A.get_mpz_t(), red.B.get_mpz_t());
  if (g != 1) throw UsageError("build_Sq: A and B must be coprime");

  SqSet s;
  s.q = q;
  Integer qz(q), rz;
  mpz_fdiv_r(rz.get_mpz_t(), red.A.get_mpz_t(), qz.get_mpz_t());
  std::uint64_t a0 = rz.get_ui();
  mpz_fdiv_r(rz.get_mpz_t(), red.B.get_mpz_t(), qz.get_mpz_t());
  std::uint64_t b0 = rz.get_ui();
  std::uint64_t qu = static_cast<std::uint64_t>(q);
  // b0, a0 < q <= 2^31 keeps a*b0 + a0 inside 64 bits.
  if (q > (1L << 31)) throw UsageError("build_Sq: q too large for the scan");
  for (std::uint64_t a = 0; a < qu; ++a) {
    std::uint64_t t = (a * b0 + a0) % qu;
    if (std::gcd(t, qu) == 1) s.members.push_back(static_cast<long>(a));
  }
  if (s.members.size() < totient_u64(qu)) {
    throw std::logic_error("build_Sq: #S(q) >= phi(q) violated");
  }
  return s;
}

CircleIntervalSet build_Aq_prime(long q, const Rational& psi_q,
                                 const Rational& gamma) {
  if (q < 1) throw UsageError("build_Aq_prime: q must be positive");
  if (psi_q < 0 || psi_q > Rational(1, 2)) {
    throw UsageError("build_Aq_prime: per-q width must lie in [0, 1/2]");
  }
  if (psi_q == 0) return CircleIntervalSet::empty();
  SqSet s = build_Sq(q, dirichlet_reduce(GammaValue(gamma), q));
  Rational g = mod1(gamma);
  Rational h = psi_q / q;
  std::vector<std::pair<Rational, Rational>> arcs;
  arcs.reserve(s.members.size());
  for (long a : s.members) {
    Rational c = (Rational(a) + g) / q;
    arcs.emplace_back(c - h, c + h);
  }
  return CircleIntervalSet::normalize(arcs);
}

TargetSetResult build_Aq_prime_outer(long q, const Rational& psi_q,
                                     const GammaValue& gamma,
                                     unsigned prec_bits) {
  if (const auto* r = std::get_if<Rational>(&gamma)) {
    return {build_Aq_prime(q, psi_q, *r), Rational(0)};
  }
  if (q < 1) throw UsageError("build_Aq_prime: q must be positive");
  if (psi_q < 0 || psi_q > Rational(1, 2)) {
    throw UsageError("build_Aq_prime: per-q width must lie in [0, 1/2]");
  }
  if (psi_q == 0) return {CircleIntervalSet::empty(), Rational(0)};
  SqSet s = build_Sq(q, dirichlet_reduce(gamma, q));
  RealEnclosure e = to_enclosure(gamma);
  e.refine(pow2_rat(-static_cast<long>(prec_bits)));
  Rational h = psi_q / q;
  std::vector<std::pair<Rational, Rational>> arcs;
  arcs.reserve(s.members.size());
  for (long a : s.members) {
    arcs.emplace_back((Rational(a) + e.lo()) / q - h,
                      (Rational(a) + e.hi()) / q + h);
  }
  return {CircleIntervalSet::normalize(arcs), e.width()};
}

Rational star_discrepancy(const std::vector<Rational>& points) {
  if (points.empty()) {
    throw UsageError("star_discrepancy: need at least one point");
  }
  long n = static_cast<long>(points.size());
  Rational best = 0;
  for (long i = 0; i < n; ++i) {
    const Rational& x = points[i];
    if (x < 0 || x >= 1) {
      throw UsageError("star_discrepancy: points must lie in [0,1)");
    }
    if (i > 0 && x < points[i - 1]) {
      throw UsageError("star_discrepancy: points must be sorted");
    }
    Rational left = abs(x - make_rational(Integer(i), Integer(n)));
    Rational right = abs(x - make_rational(Integer(i + 1), Integer(n)));
    best = std::max(best, std::max(left, right));
  }
  return best;
}

}  // namespace diolab
