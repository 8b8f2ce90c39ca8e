// SPDX-License-Identifier: Apache-2.0
#include "diolab/limsup.hpp"

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <variant>

#include "diolab/arith_stats.hpp"
#include "diolab/errors.hpp"
#include "diolab/overlaps.hpp"
#include "diolab/parallel.hpp"
#include "diolab/schmidt.hpp"

namespace diolab {

namespace {

const Rational& half_rat() {
  static const Rational half = make_rational(1, 2);
  return half;
}

}  // namespace

void OverlapMatrix::build(std::vector<Rational> mu,
                          const std::function<Rational(long, long)>& pair_fn,
                          bool validate, unsigned threads) {
  mu_ = std::move(mu);
  const long Q = static_cast<long>(mu_.size());
  if (validate) {
    for (const Rational& m : mu_)
      if (sgn(m) < 0 || m > 1)
        throw UsageError("OverlapMatrix: mu outside [0, 1]");
  }
  mu_prefix_.reserve(mu_.size());
  Rational run(0);
  for (const Rational& m : mu_) {
    run += m;
    mu_prefix_.push_back(run);
  }
  for (long g = 1; g <= Q; g *= 2) {
    grid_.push_back(g);
    if (g > Q / 2) break;
  }
  if (Q >= 1 && grid_.back() != Q) grid_.push_back(Q);
  if (Q == 0) return;

  // rows[q] = sum_{r < q} pair(q, r), one slot per q so any thread count
  // yields the same merge
  std::vector<Rational> rows(static_cast<std::size_t>(Q) + 1);
  const long kBlock = 64;
  const std::size_t nblocks =
      static_cast<std::size_t>((Q + kBlock - 1) / kBlock);
  parallel_blocks(nblocks, threads, [&](std::size_t b) {
    const long q_first = static_cast<long>(b) * kBlock + 1;
    const long q_last = std::min(Q, q_first + kBlock - 1);
    for (long q = q_first; q <= q_last; ++q) {
      std::vector<Rational> terms;
      terms.reserve(static_cast<std::size_t>(q - 1));
      for (long r = 1; r < q; ++r) {
        Rational v = pair_fn(q, r);
        if (validate) {
          const Rational& cap =
              mu_[static_cast<std::size_t>(q - 1)] <
                      mu_[static_cast<std::size_t>(r - 1)]
                  ? mu_[static_cast<std::size_t>(q - 1)]
                  : mu_[static_cast<std::size_t>(r - 1)];
          if (sgn(v) < 0 || v > cap)
            throw UsageError(
                "OverlapMatrix: pair measure outside [0, min(mu)]");
        }
        terms.push_back(std::move(v));
      }
      rows[static_cast<std::size_t>(q)] = sum_exact(std::move(terms));
    }
  });

  psums_.reserve(grid_.size());
  Rational acc(0);
  std::size_t gi = 0;
  for (long q = 1; q <= Q; ++q) {
    acc += mu_[static_cast<std::size_t>(q - 1)] +
           2 * rows[static_cast<std::size_t>(q)];
    if (gi < grid_.size() && grid_[gi] == q) {
      psums_.push_back(acc);
      ++gi;
    }
  }
}

OverlapMatrix OverlapMatrix::from_tables(
    std::vector<Rational> mu,
    const std::function<Rational(long, long)>& pair_fn) {
  OverlapMatrix m;
  m.build(std::move(mu), pair_fn, true, 1);
  return m;
}

OverlapMatrix OverlapMatrix::from_sets(
    const std::vector<CircleIntervalSet>& sets) {
  std::vector<Rational> mu;
  mu.reserve(sets.size());
  for (const CircleIntervalSet& s : sets) mu.push_back(s.measure());
  auto pair_fn = [&sets](long q, long r) {
    return intersect(sets[static_cast<std::size_t>(q - 1)],
                     sets[static_cast<std::size_t>(r - 1)])
        .measure();
  };
  OverlapMatrix m;
  m.build(std::move(mu), pair_fn, false, 1);
  return m;
}

OverlapMatrix OverlapMatrix::from_circle(long Q, const PsiSpec& psi,
                                         const TargetSeq& gamma,
                                         unsigned threads) {
  if (Q < 1 || Q > 4096)
    throw UsageError("from_circle needs 1 <= Q <= 4096");
  if (!psi.exact())
    throw UsageError("from_circle needs an exact psi kind");
  std::vector<Rational> pv(static_cast<std::size_t>(Q) + 1);
  std::vector<Rational> muv(static_cast<std::size_t>(Q));
  for (long q = 1; q <= Q; ++q) {
    Rational p = psi.eval(q);
    if (sgn(p) < 0) throw UsageError("from_circle needs psi >= 0");
    const GammaValue g = gamma.at(q);
    if (std::get_if<Rational>(&g) == nullptr)
      throw UsageError("from_circle needs rational targets");
    Rational m = 2 * p;
    if (m > 1) m = 1;
    muv[static_cast<std::size_t>(q - 1)] = m;
    pv[static_cast<std::size_t>(q)] = std::move(p);
  }
  // psi > 1/2 makes A_q the full circle up to a null set, so intersections
  // collapse to the partner's measure
  auto pair_fn = [&pv, &muv, &psi, &gamma](long q, long r) -> Rational {
    if (pv[static_cast<std::size_t>(q)] > half_rat())
      return muv[static_cast<std::size_t>(r - 1)];
    if (pv[static_cast<std::size_t>(r)] > half_rat())
      return muv[static_cast<std::size_t>(q - 1)];
    return pair_measure(q, r, psi, gamma);
  };
  OverlapMatrix m;
  m.build(muv, pair_fn, false, threads);
  return m;
}

Rational OverlapMatrix::mu_sum(long Qprime) const {
  if (Qprime < 1 || Qprime > Q())
    throw UsageError("mu_sum: Qprime out of range");
  return mu_prefix_[static_cast<std::size_t>(Qprime - 1)];
}

Rational OverlapMatrix::pair_sum(long Qprime) const {
  auto it = std::lower_bound(grid_.begin(), grid_.end(), Qprime);
  if (it == grid_.end() || *it != Qprime)
    throw UsageError("pair_sum: Qprime is not on the doubling grid");
  return psums_[static_cast<std::size_t>(it - grid_.begin())];
}

Rational bc_lower_bound(const OverlapMatrix& m, long Qprime) {
  Rational s = m.mu_sum(Qprime);
  if (sgn(s) == 0)
    throw UsageError("bc_lower_bound needs a positive measure sum");
  Rational p = m.pair_sum(Qprime);
  // the diagonal forces pair_sum >= mu_sum > 0
  if (sgn(p) == 0)
    throw std::logic_error(
        "pair sum zero with positive measure sum: corrupt overlap data");
  return s * s / p;
}

Rational chung_erdos_bound(const OverlapMatrix& m) {
  if (m.Q() == 0) throw UsageError("chung_erdos_bound: empty index set");
  Rational s = m.mu_sum(m.Q());
  if (sgn(s) == 0)
    throw UsageError("chung_erdos_bound needs a positive measure sum");
  Rational p = m.pair_sum(m.Q());
  if (sgn(p) == 0)
    throw std::logic_error(
        "pair sum zero with positive measure sum: corrupt overlap data");
  return s * s / p;
}

YuDecomposition yu_classes(const std::vector<long>& qs,
                           const std::vector<Rational>& eta,
                           const std::vector<Rational>& weights) {
  if (qs.size() != eta.size() || qs.size() != weights.size())
    throw UsageError("yu_classes: qs, eta, weights must have equal length");
  YuDecomposition d;
  std::map<long, std::vector<Rational>> terms;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    if (eta[i] < 1) throw UsageError("yu_classes: eta must map into [1, inf)");
    if (sgn(weights[i]) < 0)
      throw UsageError("yu_classes: weights must be nonnegative");
    long ell = 0;
    while (pow2_rat(ell + 1) <= eta[i]) ++ell;
    d.classes[ell].push_back(qs[i]);
    terms[ell].push_back(weights[i]);
  }
  for (auto& [ell, t] : terms) d.sigma_ell[ell] = sum_exact(std::move(t));
  return d;
}

YuDecomposition yu_classes_default(long Q,
                                   const std::vector<Rational>& weights) {
  if (Q < 0 || weights.size() != static_cast<std::size_t>(Q))
    throw UsageError("yu_classes_default: need one weight per q = 1..Q");
  std::vector<long> qs(static_cast<std::size_t>(Q));
  std::vector<Rational> eta(static_cast<std::size_t>(Q));
  for (long q = 1; q <= Q; ++q) {
    qs[static_cast<std::size_t>(q - 1)] = q;
    eta[static_cast<std::size_t>(q - 1)] =
        eta_gcdsum(static_cast<std::uint64_t>(q));
  }
  return yu_classes(qs, eta, weights);
}

namespace {

// 1 + eps as a pow_rat-compatible pair
std::pair<long, unsigned long> one_plus(const Rational& eps) {
  Rational e = Rational(1) + eps;
  if (!e.get_num().fits_slong_p() || !e.get_den().fits_ulong_p())
    throw UsageError("exponent 1 + eps out of range");
  return {e.get_num().get_si(), e.get_den().get_ui()};
}

}  // namespace

FloatInterval extra_div_weight(long q, int k, const Rational& eps,
                               mpfr_prec_t prec) {
  if (q < 1) throw UsageError("extra_div_weight needs q >= 1");
  if (k < 2) throw UsageError("extra_div_weight needs k >= 2");
  if (sgn(eps) <= 0) throw UsageError("extra_div_weight needs eps > 0");
  auto [en, ed] = one_plus(eps);
  FloatInterval lj = FloatInterval::from_long(q, prec).log_clamped();
  FloatInterval den = lj.sqrt();
  for (int j = 2; j <= k; ++j) {
    lj = lj.log_clamped();
    if (j < k)
      den = den * lj;
    else
      den = den * lj.pow_rat(en, ed);
  }
  return den.inverse();
}

std::vector<Rational> condensation_partial(
    const std::function<Rational(long)>& term, int K) {
  if (K < 0 || K > 62)
    throw UsageError("condensation_partial needs 0 <= K <= 62");
  std::vector<Rational> tv(static_cast<std::size_t>(K) + 1);
  for (int k = 0; k <= K; ++k) tv[static_cast<std::size_t>(k)] = term(1L << k);
  for (int k = 0; k < K; ++k)
    if (tv[static_cast<std::size_t>(k)] < tv[static_cast<std::size_t>(k + 1)])
      throw UsageError("condensation_partial: term increases on sampled points");
  std::vector<Rational> out;
  out.reserve(static_cast<std::size_t>(K) + 1);
  Rational run(0);
  for (int k = 0; k <= K; ++k) {
    run += pow2_rat(k) * tv[static_cast<std::size_t>(k)];
    out.push_back(run);
  }
  return out;
}

namespace {

enum class Verdict { kHit, kMiss, kUnknown };

struct PowerParams {
  Integer cnum_pow, cden_pow;  // c^sd
  long sn = 0;                 // s = sn / sd
  unsigned long sd = 1;
  bool clamp = false;
};

struct PsiCtx {
  const PsiSpec& psi;
  bool exact = false;
  bool power = false;
  PowerParams pp;
};

PsiCtx make_psi_ctx(const PsiSpec& psi) {
  PsiCtx c{psi, psi.exact(), false, {}};
  if (!c.exact && psi.kind() == PsiSpec::Kind::kPower) {
    const Rational& s = psi.power_exp();
    const Rational& coef = psi.power_coeff();
    if (!s.get_num().fits_slong_p() || !s.get_den().fits_ulong_p())
      throw UsageError("count_hits: power exponent out of range");
    c.power = true;
    c.pp.sn = s.get_num().get_si();
    c.pp.sd = s.get_den().get_ui();
    c.pp.cnum_pow = pow_int(coef.get_num(), c.pp.sd);
    c.pp.cden_pow = pow_int(coef.get_den(), c.pp.sd);
    c.pp.clamp = psi.clamp();
  }
  return c;
}

// strict d < c * q^(-s) for d >= 0, settled by raising both sides to the
// sd-th power
bool lt_power(const Rational& d, long q, const PowerParams& p) {
  Integer lhs = pow_int(d.get_num(), p.sd) * p.cden_pow;
  Integer rhs = p.cnum_pow * pow_int(d.get_den(), p.sd);
  if (p.sn >= 0)
    lhs *= pow_int(Integer(q), static_cast<unsigned long>(p.sn));
  else
    rhs *= pow_int(Integer(q), static_cast<unsigned long>(-p.sn));
  return lhs < rhs;
}

bool in_power_set(const Rational& d, long q, const PowerParams& p) {
  if (!lt_power(d, q, p)) return false;
  return !p.clamp || d * Rational(q) < 1;
}

bool lt_power_quad(const Quad& d, long q, const PowerParams& p) {
  Quad lhs = d.pow(p.sd);
  Rational lf(p.cden_pow);
  Rational rf(p.cnum_pow);
  if (p.sn >= 0)
    lf = lf * Rational(pow_int(Integer(q), static_cast<unsigned long>(p.sn)));
  else
    rf = rf * Rational(pow_int(Integer(q), static_cast<unsigned long>(-p.sn)));
  return (lhs * lf).cmp(rf) < 0;
}

bool in_power_set_quad(const Quad& d, long q, const PowerParams& p) {
  if (!lt_power_quad(d, q, p)) return false;
  return !p.clamp || (d * Rational(q)).cmp(Rational(1)) < 0;
}

constexpr unsigned kBracketBits[] = {64, 128, 256};

Verdict verdict_point(const Rational& d, long q, const PsiCtx& c) {
  if (c.exact)
    return d < c.psi.eval(q) ? Verdict::kHit : Verdict::kMiss;
  if (c.power)
    return in_power_set(d, q, c.pp) ? Verdict::kHit : Verdict::kMiss;
  for (unsigned bits : kBracketBits) {
    auto [plo, phi] = c.psi.eval_bounds(q, static_cast<mpfr_prec_t>(bits));
    if (d < plo) return Verdict::kHit;
    if (d >= phi) return Verdict::kMiss;
  }
  return Verdict::kUnknown;
}

Verdict verdict_quad(const Quad& d, long q, const PsiCtx& c) {
  if (d.is_rational()) return verdict_point(d.a(), q, c);
  if (c.exact)
    return d.cmp(c.psi.eval(q)) < 0 ? Verdict::kHit : Verdict::kMiss;
  if (c.power)
    return in_power_set_quad(d, q, c.pp) ? Verdict::kHit : Verdict::kMiss;
  for (unsigned bits : kBracketBits) {
    auto [dlo, dhi] = d.enclosure(bits);
    auto [plo, phi] = c.psi.eval_bounds(q, static_cast<mpfr_prec_t>(bits));
    if (dhi < plo) return Verdict::kHit;
    if (dlo >= phi) return Verdict::kMiss;
  }
  return Verdict::kUnknown;
}

// the hit set {d : d < psi_eff} is downward closed, so an interval is inside
// iff its top is and outside iff its bottom is not
Verdict verdict_range(const Rational& dlo, const Rational& dhi, long q,
                      const PsiCtx& c, unsigned bits) {
  if (c.exact) {
    Rational p = c.psi.eval(q);
    if (dhi < p) return Verdict::kHit;
    if (dlo >= p) return Verdict::kMiss;
    return Verdict::kUnknown;
  }
  if (c.power) {
    if (in_power_set(dhi, q, c.pp)) return Verdict::kHit;
    if (!in_power_set(dlo, q, c.pp)) return Verdict::kMiss;
    return Verdict::kUnknown;
  }
  auto [plo, phi] = c.psi.eval_bounds(q, static_cast<mpfr_prec_t>(bits));
  if (dhi < plo) return Verdict::kHit;
  if (dlo >= phi) return Verdict::kMiss;
  return Verdict::kUnknown;
}

// range of ||x|| over [a, b]: extrema sit at endpoints, integers (min 0) and
// half-integers (max 1/2)
std::pair<Rational, Rational> circle_dist_range(const Rational& a,
                                                const Rational& b) {
  Rational da = circle_dist(a), db = circle_dist(b);
  Rational lo = da < db ? da : db;
  Rational hi = da < db ? db : da;
  if (Rational(floor_rat(b)) >= a) lo = 0;
  if (Rational(floor_rat(b - half_rat())) >= a - half_rat()) hi = half_rat();
  return {lo, hi};
}

Verdict verdict_enclosure_gamma(const Rational& base, const RealEnclosure& ge,
                                long q, const PsiCtx& c) {
  RealEnclosure e = ge;
  for (unsigned bits : kBracketBits) {
    e.try_refine(pow2_rat(-static_cast<long>(bits)));
    auto [dlo, dhi] = circle_dist_range(base - e.hi(), base - e.lo());
    Verdict v = verdict_range(dlo, dhi, q, c, bits);
    if (v != Verdict::kUnknown) return v;
  }
  return Verdict::kUnknown;
}

void tally(Verdict v, HitCount& n) {
  if (v == Verdict::kHit) {
    ++n.lo;
    ++n.hi;
  } else if (v == Verdict::kUnknown) {
    ++n.hi;
  }
}

}  // namespace

HitCount count_hits(const Rational& alpha, const PsiSpec& psi,
                    const TargetSeq& gamma, long Q) {
  if (Q < 1) throw UsageError("count_hits needs Q >= 1");
  const PsiCtx ctx = make_psi_ctx(psi);
  HitCount n;
  for (long q = 1; q <= Q; ++q) {
    const GammaValue g = gamma.at(q);
    Verdict v;
    if (const Rational* gr = std::get_if<Rational>(&g)) {
      v = verdict_point(circle_dist(Rational(q) * alpha - *gr), q, ctx);
    } else if (const Quad* gq = std::get_if<Quad>(&g)) {
      Quad m = (Quad(Rational(q) * alpha) - *gq).mod1();
      Quad onem = Quad(Rational(1)) - m;
      v = verdict_quad(m.cmp(onem) <= 0 ? m : onem, q, ctx);
    } else {
      v = verdict_enclosure_gamma(Rational(q) * alpha,
                                  std::get<RealEnclosure>(g), q, ctx);
    }
    tally(v, n);
  }
  return n;
}

HitCount count_hits(const RealEnclosure& alpha, const PsiSpec& psi,
                    const TargetSeq& gamma, long Q) {
  if (alpha.is_exact()) return count_hits(alpha.lo(), psi, gamma, Q);
  if (Q < 1) throw UsageError("count_hits needs Q >= 1");
  const PsiCtx ctx = make_psi_ctx(psi);
  RealEnclosure a = alpha;
  HitCount n;
  for (long q = 1; q <= Q; ++q) {
    const GammaValue g = gamma.at(q);
    Verdict v = Verdict::kUnknown;
    for (unsigned bits : kBracketBits) {
      // q scales the alpha bracket, so ask for extra width headroom
      a.try_refine(pow2_rat(-static_cast<long>(bits + 20)));
      Rational blo = Rational(q) * a.lo();
      Rational bhi = Rational(q) * a.hi();
      Rational glo, ghi;
      if (const Rational* gr = std::get_if<Rational>(&g)) {
        glo = ghi = *gr;
      } else if (const Quad* gq = std::get_if<Quad>(&g)) {
        std::tie(glo, ghi) = gq->enclosure(bits + 20);
      } else {
        RealEnclosure e = std::get<RealEnclosure>(g);
        e.try_refine(pow2_rat(-static_cast<long>(bits + 20)));
        glo = e.lo();
        ghi = e.hi();
      }
      auto [dlo, dhi] = circle_dist_range(blo - ghi, bhi - glo);
      v = verdict_range(dlo, dhi, q, ctx, bits);
      if (v != Verdict::kUnknown) break;
    }
    tally(v, n);
  }
  return n;
}

std::pair<Rational, Rational> phi_sum(const PsiSpec& psi, long Q,
                                      mpfr_prec_t prec) {
  if (Q < 1) throw UsageError("phi_sum needs Q >= 1");
  std::vector<Rational> los;
  los.reserve(static_cast<std::size_t>(Q));
  if (psi.exact()) {
    for (long q = 1; q <= Q; ++q) los.push_back(2 * psi.eval(q));
    Rational s = sum_exact(std::move(los));
    return {s, s};
  }
  std::vector<Rational> his;
  his.reserve(static_cast<std::size_t>(Q));
  for (long q = 1; q <= Q; ++q) {
    auto [lo, hi] = psi.eval_bounds(q, prec);
    los.push_back(2 * lo);
    his.push_back(2 * hi);
  }
  return {sum_exact(std::move(los)), sum_exact(std::move(his))};
}

namespace {

// cumulative measure of the periodic family {||s|| < psi} over (-psi, y],
// valid for psi <= 1/2; differences give the mass of any [y1, y2]
Rational family_cum(const Rational& y, const Rational& psi) {
  Rational z = y + psi;
  Integer k = floor_rat(z);
  Rational frac = z - Rational(k);
  Rational two_psi = 2 * psi;
  Rational part = frac < two_psi ? frac : two_psi;
  return two_psi * Rational(k) + part;
}

}  // namespace

UniformityReport uniformity_check(const CircleIntervalSet& U,
                                  const PsiSpec& psi, const TargetSeq& gamma,
                                  long q_lo, long q_hi) {
  if (U.is_empty() || sgn(U.measure()) == 0)
    throw UsageError("uniformity_check needs a set of positive measure");
  if (q_lo < 1 || q_hi < q_lo)
    throw UsageError("uniformity_check needs 1 <= q_lo <= q_hi");
  if (!psi.exact())
    throw UsageError("uniformity_check needs an exact psi kind");
  const Rational mU = U.measure();
  UniformityReport rep;
  rep.rows.reserve(static_cast<std::size_t>(q_hi - q_lo + 1));
  for (long q = q_lo; q <= q_hi; ++q) {
    Rational pq = psi.eval(q);
    if (sgn(pq) <= 0)
      throw UsageError("uniformity_check needs psi > 0 on the range");
    Rational maq, inter;
    if (pq >= half_rat()) {
      // A_q has full measure, its complement is null
      maq = 1;
      inter = mU;
    } else {
      const GammaValue g = gamma.at(q);
      const Rational* gr = std::get_if<Rational>(&g);
      if (gr == nullptr)
        throw UsageError("uniformity_check needs rational targets");
      const Rational gm = mod1(*gr);
      maq = 2 * pq;
      std::vector<Rational> parts;
      parts.reserve(U.segments().size());
      for (const Arc& a : U.segments()) {
        Rational y1 = Rational(q) * a.lo - gm;
        Rational y2 = Rational(q) * a.hi - gm;
        parts.push_back(family_cum(y2, pq) - family_cum(y1, pq));
      }
      inter = sum_exact(std::move(parts)) / Rational(q);
    }
    Rational ratio = inter / (maq * mU);
    if (rep.rows.empty() || ratio < rep.min_ratio) rep.min_ratio = ratio;
    rep.rows.push_back(UniformityRow{q, std::move(maq), std::move(inter),
                                     std::move(ratio)});
  }
  rep.q0 = 0;
  for (auto it = rep.rows.rbegin(); it != rep.rows.rend(); ++it) {
    if (it->ratio >= half_rat())
      rep.q0 = it->q;
    else
      break;
  }
  return rep;
}

namespace {

void check_ball(const Arc& ball) {
  if (sgn(ball.lo) < 0 || ball.hi > 1 || !(ball.lo < ball.hi))
    throw UsageError("ball must be an arc with 0 <= lo < hi <= 1");
}

// members of S(q) with a mod q in [L, R]
long members_in_window(const SqSet& sq, Integer L, Integer R) {
  if (R < L) return 0;
  const long q = sq.q;
  if (R - L + 1 >= q) return static_cast<long>(sq.members.size());
  Integer shift;
  mpz_fdiv_q_ui(shift.get_mpz_t(), L.get_mpz_t(),
                static_cast<unsigned long>(q));
  L -= shift * q;
  R -= shift * q;
  long lo = L.get_si();
  long hi = R.get_si();
  auto count = [&sq](long a, long b) {
    return static_cast<long>(
        std::upper_bound(sq.members.begin(), sq.members.end(), b) -
        std::lower_bound(sq.members.begin(), sq.members.end(), a));
  };
  if (hi < q) return count(lo, hi);
  return count(lo, q - 1) + count(0, hi - q);
}

bool is_member(const SqSet& sq, long a) {
  return std::binary_search(sq.members.begin(), sq.members.end(), a);
}

// A'_q as an explicit arc union; normalize merges neighbours and saturates
// when 2 psi / q >= 1, so any psi >= 0 is fine here
CircleIntervalSet aq_prime_set(long q, const Rational& pq, const Rational& gm,
                               const SqSet& sq) {
  std::vector<std::pair<Rational, Rational>> arcs;
  arcs.reserve(sq.members.size());
  const Rational qr(q);
  const Rational h = pq / qr;
  for (long a : sq.members) {
    Rational c = (Rational(a) + gm) / qr;
    arcs.emplace_back(c - h, c + h);
  }
  return CircleIntervalSet::normalize(arcs);
}

// meas(ball cap A'_q) with S(q) precomputed; gm = gamma mod 1
Rational ball_overlap_core(const Arc& ball, long q, const Rational& pq,
                           const Rational& gm, const SqSet& sq) {
  if (sgn(pq) == 0 || sq.members.empty()) return Rational(0);
  if (ball.hi - ball.lo == 1) {
    // full-circle ball: the overlap is meas(A'_q) itself
    if (pq > half_rat()) return aq_prime_set(q, pq, gm, sq).measure();
    return Rational(static_cast<long>(sq.members.size())) * 2 * pq /
           Rational(q);
  }
  if (pq > half_rat()) {
    // arcs overlap their neighbours; go through the canonical set form
    CircleIntervalSet s = aq_prime_set(q, pq, gm, sq);
    CircleIntervalSet b = CircleIntervalSet::normalize({{ball.lo, ball.hi}});
    return intersect(s, b).measure();
  }
  const Rational qr(q);
  const Rational h = pq / qr;  // arc half-width
  const Rational v = (ball.hi - ball.lo) / 2;
  const Rational cB = (ball.lo + ball.hi) / 2;
  Rational hi_t = v + h;
  if (hi_t > half_rat()) {
    // the ball nearly fills the circle and arcs can meet it on both sides;
    // per-member evaluation stays exact
    std::vector<Rational> parts;
    parts.reserve(sq.members.size());
    for (long a : sq.members) {
      Rational D = circle_dist((Rational(a) + gm) / qr - cB);
      parts.push_back(arc_overlap(h, v, D));
    }
    return sum_exact(std::move(parts));
  }
  Rational lo_t = v - h;
  if (sgn(lo_t) < 0) lo_t = -lo_t;
  // ||c_a - c_B|| <= lo_t gives full overlap min(2h, 2v); beyond hi_t gives
  // none; the fringe between them spans at most q * 2 min(v, h) <= 1 integers
  // per side
  auto window = [&](const Rational& t) {
    Integer L = ceil_rat(qr * (cB - t) - gm);
    Integer R = floor_rat(qr * (cB + t) - gm);
    if (R - L + 1 > q) R = L + (q - 1);
    return std::pair<Integer, Integer>(L, R);
  };
  auto [Lhi, Rhi] = window(hi_t);
  auto [Llo, Rlo] = window(lo_t);
  Rational full_len = 2 * (h < v ? h : v);
  std::vector<Rational> parts;
  parts.push_back(Rational(members_in_window(sq, Llo, Rlo)) * full_len);
  auto fringe = [&](Integer x, const Integer& last) {
    for (; x <= last; x += 1) {
      Integer am;
      mpz_fdiv_r_ui(am.get_mpz_t(), x.get_mpz_t(),
                    static_cast<unsigned long>(q));
      long a = am.get_si();
      if (!is_member(sq, a)) continue;
      Rational D = circle_dist((Rational(a) + gm) / qr - cB);
      parts.push_back(arc_overlap(h, v, D));
    }
  };
  if (Rlo < Llo) {
    fringe(Lhi, Rhi);
  } else {
    fringe(Lhi, Llo - 1);
    fringe(Rlo + 1, Rhi);
  }
  return sum_exact(std::move(parts));
}

}  // namespace

Rational ball_aqprime_overlap(const Arc& ball, long q, const Rational& psi_q,
                              const Rational& gamma) {
  if (q < 1) throw UsageError("ball_aqprime_overlap needs q >= 1");
  check_ball(ball);
  if (sgn(psi_q) < 0)
    throw UsageError("ball_aqprime_overlap needs psi_q >= 0");
  const Rational gm = mod1(gamma);
  const SqSet sq = build_Sq(q, dirichlet_reduce(GammaValue(gm), q));
  return ball_overlap_core(ball, q, psi_q, gm, sq);
}

std::vector<BhvBallReport> bhv_local_check(const std::vector<Arc>& balls,
                                           long q_lo, long q_hi,
                                           const PsiSpec& psi,
                                           const GammaValue& gamma,
                                           const Rational& delta) {
  if (balls.empty()) throw UsageError("bhv_local_check needs balls");
  for (const Arc& b : balls) check_ball(b);
  if (q_lo < 1 || q_hi < q_lo)
    throw UsageError("bhv_local_check needs 1 <= q_lo <= q_hi");
  if (sgn(delta) < 0) throw UsageError("bhv_local_check needs delta >= 0");
  if (!psi.exact())
    throw UsageError("bhv_local_check needs an exact psi kind");
  const Rational* gr = std::get_if<Rational>(&gamma);
  if (gr == nullptr)
    throw UsageError("bhv_local_check needs a rational target");
  const Rational gm = mod1(*gr);
  const Rational one_plus_delta = 1 + delta;

  const std::size_t nb = balls.size();
  std::vector<BhvBallReport> reps(nb);
  std::vector<long> last_bad(nb, 0);
  std::vector<bool> seeded(nb, false);
  for (std::size_t i = 0; i < nb; ++i) reps[i].ball = balls[i];

  for (long q = q_lo; q <= q_hi; ++q) {
    Rational pq = psi.eval(q);
    if (sgn(pq) < 0) throw UsageError("bhv_local_check needs psi >= 0");
    const SqSet sq = build_Sq(q, dirichlet_reduce(GammaValue(gm), q));
    Rational maq;
    if (pq > half_rat())
      maq = aq_prime_set(q, pq, gm, sq).measure();
    else
      maq = Rational(static_cast<long>(sq.members.size())) * 2 * pq /
            Rational(q);
    for (std::size_t i = 0; i < nb; ++i) {
      Rational lhs = ball_overlap_core(balls[i], q, pq, gm, sq);
      Rational rhs =
          one_plus_delta * (balls[i].hi - balls[i].lo) * maq;
      Rational excess = lhs - rhs;
      if (!seeded[i] || excess > reps[i].worst_excess) {
        reps[i].worst_excess = excess;
        seeded[i] = true;
      }
      if (sgn(excess) > 0) {
        ++reps[i].violations;
        last_bad[i] = q;
      }
    }
  }
  for (std::size_t i = 0; i < nb; ++i) {
    if (last_bad[i] == 0)
      reps[i].q0 = q_lo;
    else if (last_bad[i] < q_hi)
      reps[i].q0 = last_bad[i] + 1;
    else
      reps[i].q0 = 0;
  }
  return reps;
}

FloatInterval yu_h(long x, int k, const Rational& eps, mpfr_prec_t prec) {
  if (x < 1) throw UsageError("yu_h needs x >= 1");
  if (k < 2) throw UsageError("yu_h needs k >= 2");
  if (sgn(eps) <= 0) throw UsageError("yu_h needs eps > 0");
  auto [en, ed] = one_plus(eps);
  FloatInterval y = FloatInterval::from_long(x, prec).log_clamped();
  if (k == 2) return y.pow_rat(en, ed);
  FloatInterval f = y;
  FloatInterval lj = y;
  for (int j = 1; j <= k - 2; ++j) {
    lj = lj.log_clamped();
    if (j < k - 2)
      f = f * lj;
    else
      f = f * lj.pow_rat(en, ed);
  }
  return f;
}

HAdmissReport h_admissible(const std::function<FloatInterval(long)>& h, int L,
                           const Rational& tol, const Rational& ratio_cap) {
  if (L < 2 || L > 62) throw UsageError("h_admissible needs 2 <= L <= 62");
  if (sgn(tol) <= 0 || sgn(ratio_cap) <= 0)
    throw UsageError("h_admissible needs positive tol and ratio_cap");
  std::vector<FloatInterval> hv;
  hv.reserve(static_cast<std::size_t>(L) + 1);
  for (int l = 0; l <= L; ++l) {
    FloatInterval v = h(1L << l);
    if (v.sign_lo() <= 0)
      throw UsageError("h_admissible: h must be positive at sampled points");
    hv.push_back(std::move(v));
  }
  HAdmissReport rep;
  rep.flat = true;
  rep.ratio_bounded = true;
  rep.max_tail_increment = 0;
  rep.max_doubling_ratio = 0;
  FloatInterval sum = FloatInterval::from_rational(Rational(0));
  for (int l = 1; l <= L; ++l) {
    FloatInterval inc = hv[static_cast<std::size_t>(l)].inverse();
    sum = sum + inc;
    if (l > L / 2) {
      Rational u = inc.hi_rational();
      if (u > rep.max_tail_increment) rep.max_tail_increment = u;
      if (u > tol) rep.flat = false;
    }
  }
  for (int j = 0; j < L; ++j) {
    FloatInterval r = hv[static_cast<std::size_t>(j + 1)] /
                      hv[static_cast<std::size_t>(j)];
    Rational u = r.hi_rational();
    if (u > rep.max_doubling_ratio) rep.max_doubling_ratio = u;
    if (u > ratio_cap) rep.ratio_bounded = false;
  }
  rep.partial_sum = sum;
  return rep;
}

}  // namespace diolab
