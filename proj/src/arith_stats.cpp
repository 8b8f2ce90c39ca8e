// SPDX-License-Identifier: Apache-2.0
#include "diolab/arith_stats.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "diolab/errors.hpp"
#include "diolab/exact_sum.hpp"

namespace diolab {

std::vector<std::pair<std::uint64_t, unsigned>> factorize(std::uint64_t n) {
  if (n == 0) throw UsageError("factorize: n must be positive");
  std::vector<std::pair<std::uint64_t, unsigned>> out;
  for (std::uint64_t p = 2; p * p <= n; p += (p == 2) ? 1 : 2) {
    if (n % p != 0) continue;
    unsigned e = 0;
    while (n % p == 0) {
      n /= p;
      ++e;
    }
    out.emplace_back(p, e);
  }
  if (n > 1) out.emplace_back(n, 1);
  return out;
}

std::vector<std::uint64_t> divisors(std::uint64_t n) {
  std::vector<std::uint64_t> out{1};
  for (const auto& [p, e] : factorize(n)) {
    std::size_t base = out.size();
    std::uint64_t pk = 1;
    for (unsigned j = 1; j <= e; ++j) {
      pk *= p;
      for (std::size_t i = 0; i < base; ++i) out.push_back(out[i] * pk);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::uint64_t totient_u64(std::uint64_t n) {
  std::uint64_t phi = 1;
  for (const auto& [p, e] : factorize(n)) {
    std::uint64_t pe = 1;
    for (unsigned j = 1; j < e; ++j) pe *= p;
    phi *= pe * (p - 1);
  }
  return phi;
}

FloatInterval sigma_tau(std::uint64_t n, const Rational& tau,
                        mpfr_prec_t prec) {
  if (tau.get_den().fits_ulong_p() == 0 || tau.get_num().fits_slong_p() == 0) {
    throw UsageError("sigma_tau: exponent out of supported range");
  }
  long num = tau.get_num().get_si();
  unsigned long den = tau.get_den().get_ui();
  FloatInterval acc = FloatInterval::from_long(0, prec);
  for (std::uint64_t dv : divisors(n)) {
    acc = acc + FloatInterval::from_long(static_cast<long>(dv), prec)
                    .pow_rat(num, den);
  }
  return acc;
}

Rational sigma_tau_exact(std::uint64_t n, long tau) {
  Rational acc = 0;
  for (std::uint64_t dv : divisors(n)) {
    Integer p = pow_int(Integer(static_cast<unsigned long>(dv)),
                        static_cast<unsigned long>(tau < 0 ? -tau : tau));
    acc += (tau < 0) ? Rational(1) / Rational(p) : Rational(p);
  }
  return acc;
}

Rational eta_gcdsum(std::uint64_t q) {
  Rational eta = 1;
  std::uint64_t dq = 1;
  for (const auto& [p, e] : factorize(q)) {
    eta *= make_rational(Integer(static_cast<unsigned long>(p + e * (p - 1))),
                         Integer(static_cast<unsigned long>(p)));
    dq *= e + 1;
  }
  if (eta > Rational(static_cast<unsigned long>(dq))) {
    throw std::logic_error("eta_gcdsum: eta(q) <= d(q) violated");
  }
  return eta;
}

Integer kac_threshold(std::uint64_t x) {
  if (x < 3) throw UsageError("kac_threshold: x must be at least 3");
  for (mpfr_prec_t prec = 128; prec <= 512; prec *= 2) {
    FloatInterval cutoff = FloatInterval::from_rational(
                               Rational(static_cast<unsigned long>(x)), prec)
                               .log_clamped()
                               .log_clamped()
                               .exp2();
    Integer lo = floor_rat(cutoff.lo_rational());
    Integer hi = floor_rat(cutoff.hi_rational());
    if (lo == hi) return lo;
  }
  throw PrecisionError("kac_threshold: cutoff floor did not stabilize");
}

namespace {

constexpr std::uint64_t kTableLimit = 10'000'000;

// Applies fn(n, d(n)) for all n <= x, via tables when they fit.
void for_each_divisor_count(
    std::uint64_t x,
    const std::function<void(std::uint64_t, std::uint32_t)>& fn) {
  if (x <= kTableLimit) {
    SieveTables t = sieve(x);
    for (std::uint64_t n = 1; n <= x; ++n) fn(n, t.d[n]);
    return;
  }
  stream_divisor_counts(x, fn);
}

}  // namespace

Rational kac_fraction(std::uint64_t x) {
  if (x < 3) throw UsageError("kac_fraction: x must be at least 3");
  Integer cutoff = kac_threshold(x);
  std::uint64_t count = 0;
  for_each_divisor_count(x, [&](std::uint64_t, std::uint32_t d) {
    if (::cmp(cutoff, static_cast<unsigned long>(d)) >= 0) ++count;
  });
  return make_rational(Integer(static_cast<unsigned long>(count)),
                       Integer(static_cast<unsigned long>(x)));
}

Rational recip_divisor_sum(std::uint64_t x) {
  std::map<std::uint32_t, std::uint64_t> tally;
  for_each_divisor_count(
      x, [&](std::uint64_t, std::uint32_t d) { ++tally[d]; });
  Rational acc = 0;
  for (const auto& [d, count] : tally) {
    acc += make_rational(Integer(static_cast<unsigned long>(count)),
                         Integer(static_cast<unsigned long>(d)));
  }
  return acc;
}

FloatInterval recip_divisor_ratio(std::uint64_t x, mpfr_prec_t prec) {
  if (x < 3) throw UsageError("recip_divisor_ratio: x must be at least 3");
  Rational s = recip_divisor_sum(x);
  FloatInterval logx =
      FloatInterval::from_rational(Rational(static_cast<unsigned long>(x)),
                                   prec)
          .log_clamped();
  return FloatInterval::from_rational(s, prec) * logx.sqrt() /
         FloatInterval::from_rational(Rational(static_cast<unsigned long>(x)),
                                      prec);
}

std::pair<Rational, Rational> totient_ratio_bounds(const SieveTables& t,
                                                   std::uint64_t n) {
  if (n < 1 || n > t.limit) {
    throw UsageError("totient_ratio_bounds: n out of table range");
  }
  FixedPointSum acc(96);
  for (std::uint64_t k = 1; k <= n; ++k) {
    acc.add(make_rational(Integer(static_cast<unsigned long>(t.phi[k])),
                          Integer(static_cast<unsigned long>(k))));
  }
  Rational scale = make_rational(Integer(1),
                                 Integer(static_cast<unsigned long>(n)));
  return {acc.lo() * scale, acc.hi() * scale};
}

ComparatorReport compare_weighted_sums(const std::vector<Rational>& f,
                                       const std::vector<Rational>& g,
                                       const std::vector<Rational>& h,
                                       const Rational& c) {
  if (f.size() != g.size() || f.size() != h.size()) {
    throw UsageError("compare_weighted_sums: length mismatch");
  }
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (sgn(f[i]) < 0 || sgn(g[i]) < 0 || sgn(h[i]) < 0) {
      throw UsageError("compare_weighted_sums: entries must be nonnegative");
    }
    if (i + 1 < f.size() && f[i] < f[i + 1]) {
      throw UsageError("compare_weighted_sums: f must be decreasing");
    }
  }
  ComparatorReport rep;
  rep.hypothesis_ok = true;
  Rational pg = 0, ph = 0;
  rep.sum_fg = 0;
  rep.sum_fh = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    pg += g[i];
    ph += h[i];
    if (pg > c * ph || ph > c * pg) rep.hypothesis_ok = false;
    rep.sum_fg += f[i] * g[i];
    rep.sum_fh += f[i] * h[i];
  }
  rep.conclusion_ok =
      rep.sum_fg <= c * rep.sum_fh && rep.sum_fh <= c * rep.sum_fg;
  return rep;
}

}  // namespace diolab
