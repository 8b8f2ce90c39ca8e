// SPDX-License-Identifier: Apache-2.0
#include "diolab/continued_fraction.hpp"

#include <algorithm>

#include "diolab/errors.hpp"

namespace diolab {

RealEnclosure to_enclosure(const GammaValue& g) {
  if (const auto* r = std::get_if<Rational>(&g)) return RealEnclosure(*r);
  if (const auto* s = std::get_if<Quad>(&g)) return RealEnclosure::from_quad(*s);
  return std::get<RealEnclosure>(g);
}

namespace {

// h_k = a_k h_{k-1} + h_{k-2}, same for k_k; gcd(h_k, k_k) = 1 throughout.
struct ConvergentRecurrence {
  Integer hm2{0}, hm1{1}, km2{1}, km1{0};

  std::pair<Integer, Integer> push(const Integer& a) {
    Integer h = a * hm1 + hm2;
    Integer k = a * km1 + km2;
    hm2 = hm1;
    hm1 = h;
    km2 = km1;
    km1 = k;
    return {h, k};
  }
};

using ConvergentList = std::vector<std::pair<Integer, Integer>>;

ConvergentList rational_cf(const Rational& g, const Integer& bound) {
  ConvergentList out;
  ConvergentRecurrence rec;
  Integer n = g.get_num(), d = g.get_den();
  while (d != 0) {
    Integer a, r;
    mpz_fdiv_qr(a.get_mpz_t(), r.get_mpz_t(), n.get_mpz_t(), d.get_mpz_t());
    auto [h, k] = rec.push(a);
    if (k > bound) break;
    out.emplace_back(h, k);
    n = d;
    d = r;
  }
  return out;
}

ConvergentList quad_cf(Quad x, const Integer& bound) {
  ConvergentList out;
  ConvergentRecurrence rec;
  for (;;) {
    Integer a = x.floor();
    auto [h, k] = rec.push(a);
    if (k > bound) return out;
    out.emplace_back(h, k);
    Quad frac = x - Rational(a);
    if (frac.sign() == 0) return out;  // rational tail: expansion ends
    x = frac.inverse();
  }
}

ConvergentList enclosure_cf(RealEnclosure g, const Integer& bound) {
  for (;;) {
    ConvergentList out;
    ConvergentRecurrence rec;
    Rational lo = g.lo(), hi = g.hi();
    for (;;) {
      Integer alo = floor_rat(lo), ahi = floor_rat(hi);
      if (alo != ahi) break;  // next quotient not separated yet
      auto [h, k] = rec.push(alo);
      if (k > bound) return out;
      out.emplace_back(h, k);
      Rational fhi = hi - Rational(alo);
      if (sgn(fhi) == 0) return out;  // tail exactly zero: rational, done
      Rational flo = lo - Rational(alo);
      if (sgn(flo) <= 0) break;  // cannot certify a nonzero tail
      lo = Rational(1) / fhi;
      hi = Rational(1) / flo;
    }
    unsigned b = g.bits();
    if (g.is_exact() || b >= RealEnclosure::kCapBits) {
      throw PrecisionError(
          "cf_convergents: insufficient precision to determine the next "
          "partial quotient");
    }
    g.refine_bits(b >= RealEnclosure::kCapBits / 2 ? RealEnclosure::kCapBits
                                                   : std::max(64u, b * 2));
  }
}

}  // namespace

ConvergentList cf_convergents(const GammaValue& gamma,
                              const Integer& denom_bound) {
  if (denom_bound < 1) {
    throw UsageError("cf_convergents: denominator bound must be >= 1");
  }
  if (const auto* r = std::get_if<Rational>(&gamma)) {
    return rational_cf(*r, denom_bound);
  }
  if (const auto* s = std::get_if<Quad>(&gamma)) {
    return s->is_rational() ? rational_cf(s->a(), denom_bound)
                            : quad_cf(*s, denom_bound);
  }
  const auto& e = std::get<RealEnclosure>(gamma);
  return e.is_exact() ? rational_cf(e.lo(), denom_bound)
                      : enclosure_cf(e, denom_bound);
}

}  // namespace diolab
