// SPDX-License-Identifier: Apache-2.0

#include "diolab/overlaps.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <variant>

#include "diolab/errors.hpp"
#include "diolab/interval_set.hpp"
#include "diolab/parallel.hpp"
#include "diolab/schmidt.hpp"

namespace diolab {
namespace {

using i128 = __int128;

constexpr long kQiaExactCap = 4096;
constexpr unsigned kFixedBits = 96;    // fixed-point scale of the scaled sweep
constexpr unsigned kBracketBits = 80;  // target bracket scale, scaled sweep
constexpr unsigned kLemBracketBits = 48;

long checked_mul(long a, long b, const char* what) {
  long out;
  if (__builtin_mul_overflow(a, b, &out))
    throw UsageError(std::string(what) + " exceeds the 63-bit range");
  return out;
}

i128 to_i128(const Integer& z) {
  Integer a = z < 0 ? Integer(-z) : z;
  if (mpz_sizeinbase(a.get_mpz_t(), 2) > 126)
    throw UsageError("value exceeds the 128-bit fast path");
  Integer hi = a >> 64;
  Integer lo = a - (hi << 64);
  unsigned __int128 u =
      (static_cast<unsigned __int128>(mpz_get_ui(hi.get_mpz_t())) << 64) |
      mpz_get_ui(lo.get_mpz_t());
  i128 v = static_cast<i128>(u);
  return z < 0 ? -v : v;
}

Integer from_i128(i128 v) {
  unsigned __int128 u = v < 0 ? -static_cast<unsigned __int128>(v)
                              : static_cast<unsigned __int128>(v);
  Integer out(static_cast<unsigned long>(u >> 64));
  out <<= 64;
  out += static_cast<unsigned long>(u);
  return v < 0 ? Integer(-out) : out;
}

// floor / ceil division, divisor > 0
template <typename I>
I fdiv_any(I a, I b) {
  I q = a / b;
  if (a % b != 0 && a < 0) --q;
  return q;
}

template <typename I>
I cdiv_any(I a, I b) {
  I q = a / b;
  if (a % b != 0 && a > 0) ++q;
  return q;
}

i128 fdiv_i128(i128 a, i128 b) { return fdiv_any<i128>(a, b); }
i128 cdiv_i128(i128 a, i128 b) { return cdiv_any<i128>(a, b); }
long fdiv_long(long a, long b) { return fdiv_any<long>(a, b); }
long cdiv_long(long a, long b) { return cdiv_any<long>(a, b); }

long mod_inverse(long a, long m) {
  if (m < 1) throw UsageError("mod_inverse needs m >= 1");
  if (m == 1) return 0;
  long r0 = a % m;
  if (r0 < 0) r0 += m;
  long r1 = m, s0 = 1, s1 = 0;
  while (r1 != 0) {
    long k = r0 / r1;
    long t = r0 - k * r1;
    r0 = r1;
    r1 = t;
    t = s0 - k * s1;
    s0 = s1;
    s1 = t;
  }
  if (r0 != 1) throw UsageError("mod_inverse arguments are not coprime");
  s0 %= m;
  if (s0 < 0) s0 += m;
  return s0;
}

const Rational* rational_target(const GammaValue& g) {
  return std::get_if<Rational>(&g);
}

std::pair<Rational, Rational> target_bracket(const GammaValue& g,
                                             unsigned bits) {
  if (const Rational* r = rational_target(g)) return {*r, *r};
  if (const Quad* s = std::get_if<Quad>(&g)) return s->enclosure(bits);
  RealEnclosure e = std::get<RealEnclosure>(g);
  e.refine(pow2_rat(-static_cast<long>(bits)));
  return {e.lo(), e.hi()};
}

// |[lo, hi]| as an interval
std::pair<Rational, Rational> abs_interval(const Rational& lo,
                                           const Rational& hi) {
  if (sgn(lo) >= 0) return {lo, hi};
  if (sgn(hi) <= 0) return {Rational(-hi), Rational(-lo)};
  Rational a = -lo;
  return {Rational(0), a > hi ? a : hi};
}

// |base + coeff * gamma| < thr, exact verdict for every target kind
bool abs_lt_exact(long base, long coeff, const GammaValue& gamma,
                  const Rational& thr) {
  if (const Rational* r = rational_target(gamma)) {
    Rational l = Rational(base) + Rational(coeff) * *r;
    Rational a = sgn(l) < 0 ? Rational(-l) : l;
    return a < thr;
  }
  if (const Quad* s = std::get_if<Quad>(&gamma)) {
    Quad l = *s * Rational(coeff) + Rational(base);
    return l.abs().cmp(thr) < 0;
  }
  RealEnclosure e = std::get<RealEnclosure>(gamma);
  for (unsigned bits = 64; bits <= RealEnclosure::kCapBits; bits *= 2) {
    e.refine(pow2_rat(-static_cast<long>(bits)));
    Rational c0 = Rational(base) + Rational(coeff) * e.lo();
    Rational c1 = Rational(base) + Rational(coeff) * e.hi();
    if (c0 > c1) std::swap(c0, c1);
    auto a = abs_interval(c0, c1);
    if (a.second < thr) return true;
    if (a.first >= thr) return false;
  }
  throw PrecisionError("strict comparison undecided at the precision cap");
}

// |base + coeff * gamma|^s_exp < gp. Cross-powering keeps the fractional
// power threshold g^(p/s) exact: both sides are raised to the s-th power.
bool abs_pow_lt(long base, long coeff, const GammaValue& gamma,
                unsigned long s_exp, const Rational& gp) {
  if (const Rational* r = rational_target(gamma)) {
    Rational l = Rational(base) + Rational(coeff) * *r;
    Rational a = sgn(l) < 0 ? Rational(-l) : l;
    return pow_rat(a, s_exp) < gp;
  }
  if (const Quad* s = std::get_if<Quad>(&gamma)) {
    Quad l = (*s * Rational(coeff) + Rational(base)).abs();
    return l.pow(s_exp).cmp(gp) < 0;
  }
  RealEnclosure e = std::get<RealEnclosure>(gamma);
  for (unsigned bits = 64; bits <= RealEnclosure::kCapBits; bits *= 2) {
    e.refine(pow2_rat(-static_cast<long>(bits)));
    Rational c0 = Rational(base) + Rational(coeff) * e.lo();
    Rational c1 = Rational(base) + Rational(coeff) * e.hi();
    if (c0 > c1) std::swap(c0, c1);
    auto a = abs_interval(c0, c1);
    if (pow_rat(a.second, s_exp) < gp) return true;
    if (pow_rat(a.first, s_exp) >= gp) return false;
  }
  throw PrecisionError("power comparison undecided at the precision cap");
}

// floor bracket of (ra + coeff * gamma) / q
std::pair<long, long> center_floor_range(long ra, long coeff, long q,
                                         const GammaValue& gamma) {
  Integer f0, f1;
  if (const Rational* g0 = rational_target(gamma)) {
    Rational x = (Rational(ra) + Rational(coeff) * *g0) / Rational(q);
    f0 = f1 = floor_rat(x);
  } else if (const Quad* s = std::get_if<Quad>(&gamma)) {
    Quad x = (*s * Rational(coeff) + Rational(ra)) / Rational(q);
    f0 = f1 = x.floor();
  } else {
    auto br = target_bracket(gamma, 64);
    Rational x0 = (Rational(ra) + Rational(coeff) * br.first) / Rational(q);
    Rational x1 = (Rational(ra) + Rational(coeff) * br.second) / Rational(q);
    if (x0 > x1) std::swap(x0, x1);
    f0 = floor_rat(x0);
    f1 = floor_rat(x1);
  }
  if (!f0.fits_slong_p() || !f1.fits_slong_p())
    throw UsageError("arc center out of the long range");
  return {f0.get_si(), f1.get_si()};
}

struct MaskView {
  const std::vector<std::uint64_t>* words = nullptr;
  std::size_t off = 0;
  bool test(long a) const {
    return ((*words)[off + static_cast<std::size_t>(a >> 6)] >> (a & 63)) & 1;
  }
};

// Exact sum over residue classes of r a - q b mod q r of
// multiplicity(class) * overlap(class distance). Without masks every class
// carries multiplicity gcd(q, r) (full center grids); with masks only
// members of S(q) x S(r) count. Only classes within the distance threshold
// u + v of an anchor are enumerated, so work scales with the overlap count,
// never with the q * r product.
Rational class_overlap_sum(long q, long r, const Rational& psi_q,
                           const Rational& psi_r, const Rational& gamma_q,
                           const Rational& gamma_r, const MaskView* mask_q,
                           const MaskView* mask_r) {
  if (sgn(psi_q) == 0 || sgn(psi_r) == 0) return Rational(0);
  long g = std::gcd(q, r);
  long qr = checked_mul(q, r, "q*r");
  long P = q / g;
  long inv = mod_inverse((r / g) % P, P);
  Rational qr_rat(qr);
  Rational u = psi_q / Rational(q);
  Rational v = psi_r / Rational(r);
  Rational theta = Rational(r) * gamma_q - Rational(q) * gamma_r;
  // distances only depend on theta mod qr
  theta -= Rational(floor_rat(theta / qr_rat)) * qr_rat;
  Rational W = Rational(r) * psi_q + Rational(q) * psi_r;  // (u + v) q r
  std::set<long> cands;
  for (int k = 0; k <= 2; ++k) {
    Rational lo = Rational(k) * qr_rat - theta - W;
    Rational hi = Rational(k) * qr_rat - theta + W;
    Integer jlo = floor_rat(lo / Rational(g));
    Integer jhi = ceil_rat(hi / Rational(g));
    // endpoint overshoot is harmless: out-of-threshold classes add zero
    for (Integer j = jlo; j <= jhi; j += 1) {
      Integer m = j * g;
      m %= qr;
      if (m < 0) m += qr;
      cands.insert(m.get_si());
    }
  }
  std::vector<Rational> terms;
  for (long m : cands) {
    Rational x = Rational(m) + theta;  // in [0, 2 qr)
    if (x >= qr_rat) x -= qr_rat;
    Rational dn = qr_rat - x;
    if (x < dn) dn = x;
    Rational ov = arc_overlap(u, v, dn / qr_rat);
    if (sgn(ov) == 0) continue;
    if (mask_q == nullptr) {
      terms.push_back(Rational(g) * ov);
    } else {
      long a0 = (m / g % P) * inv % P;
      long n = 0;
      for (long i = 0; i < g; ++i) {
        long a = a0 + i * P;
        if (!mask_q->test(a)) continue;
        long b = (r * a - m) / q % r;
        if (b < 0) b += r;
        if (mask_r->test(b)) ++n;
      }
      if (n > 0) terms.push_back(Rational(n) * ov);
    }
  }
  return sum_exact(std::move(terms));
}

void check_pair_pre(long q, long r, const Rational& psi_q,
                    const Rational& psi_r) {
  if (r < 1 || r >= q) throw UsageError("pair sweep needs 1 <= r < q");
  static const Rational half = make_rational(1, 2);
  if (sgn(psi_q) < 0 || sgn(psi_r) < 0 || psi_q > half || psi_r > half)
    throw UsageError("pair sweep needs 0 <= psi <= 1/2 at both scales");
}

Rational require_rational(const GammaValue& g, const char* where) {
  if (const Rational* r = rational_target(g)) return *r;
  throw UsageError(std::string(where) +
                   ": target is not rational; use pair_measure_bounds");
}

}  // namespace

Rational arc_overlap(const Rational& u, const Rational& v, const Rational& D) {
  static const Rational half = make_rational(1, 2);
  if (sgn(u) < 0 || sgn(v) < 0 || sgn(D) < 0 || u > half || v > half ||
      D > half)
    throw UsageError("arc_overlap needs 0 <= u, v <= 1/2 and 0 <= D <= 1/2");
  if (sgn(u) == 0 || sgn(v) == 0) return Rational(0);
  Rational hi_end = D + v;
  if (u < hi_end) hi_end = u;
  Rational lo_end = D - v;
  Rational mu = -u;
  if (mu > lo_end) lo_end = mu;
  Rational direct = hi_end - lo_end;
  if (sgn(direct) < 0) direct = 0;
  // the two arcs can also meet across the far side of the circle
  Rational wrap = u + v + D - 1;
  if (sgn(wrap) < 0) wrap = 0;
  return direct + wrap;
}

Rational pair_measure(long q, long r, const PsiSpec& psi,
                      const TargetSeq& gamma) {
  Rational pq = psi.eval(q), pr = psi.eval(r);
  check_pair_pre(q, r, pq, pr);
  Rational gq = require_rational(gamma.at(q), "pair_measure");
  Rational gr = require_rational(gamma.at(r), "pair_measure");
  return class_overlap_sum(q, r, pq, pr, gq, gr, nullptr, nullptr);
}

Rational pair_measure_oracle(long q, long r, const PsiSpec& psi,
                             const TargetSeq& gamma) {
  Rational pq = psi.eval(q), pr = psi.eval(r);
  check_pair_pre(q, r, pq, pr);
  Rational gq = require_rational(gamma.at(q), "pair_measure_oracle");
  Rational gr = require_rational(gamma.at(r), "pair_measure_oracle");
  return intersect(target_set(q, gq, pq), target_set(r, gr, pr)).measure();
}

std::pair<Rational, Rational> pair_measure_bounds(long q, long r,
                                                  const PsiSpec& psi,
                                                  const TargetSeq& gamma,
                                                  unsigned prec_bits) {
  Rational pq = psi.eval(q), pr = psi.eval(r);
  check_pair_pre(q, r, pq, pr);
  GammaValue vq = gamma.at(q), vr = gamma.at(r);
  const Rational* eq = rational_target(vq);
  const Rational* er = rational_target(vr);
  if (eq != nullptr && er != nullptr) {
    Rational m = class_overlap_sum(q, r, pq, pr, *eq, *er, nullptr, nullptr);
    return {m, m};
  }
  auto bq = target_bracket(vq, prec_bits);
  auto br = target_bracket(vr, prec_bits);
  // outer arcs contain the true arc for every target in the bracket, inner
  // arcs are contained in it; intersecting like with like keeps the order
  auto arcs = [](long n, const Rational& glo, const Rational& ghi,
                 const Rational& pn, bool outer) {
    std::vector<std::pair<Rational, Rational>> raw;
    for (long a = 0; a < n; ++a) {
      Rational lo = outer ? (Rational(a) + glo - pn) / Rational(n)
                          : (Rational(a) + ghi - pn) / Rational(n);
      Rational hi = outer ? (Rational(a) + ghi + pn) / Rational(n)
                          : (Rational(a) + glo + pn) / Rational(n);
      if (lo < hi) raw.emplace_back(lo, hi);
    }
    return CircleIntervalSet::normalize(raw);
  };
  Rational hi = intersect(arcs(q, bq.first, bq.second, pq, true),
                          arcs(r, br.first, br.second, pr, true))
                    .measure();
  Rational lo = intersect(arcs(q, bq.first, bq.second, pq, false),
                          arcs(r, br.first, br.second, pr, false))
                    .measure();
  return {lo, hi};
}

PairStats overlap_bound_check(long q, long r, const PsiSpec& psi,
                              const TargetSeq& gamma) {
  Rational pq = psi.eval(q), pr = psi.eval(r);
  check_pair_pre(q, r, pq, pr);
  Rational gq = require_rational(gamma.at(q), "overlap_bound_check");
  Rational gr = require_rational(gamma.at(r), "overlap_bound_check");
  PairStats st;
  st.q = q;
  st.r = r;
  st.n_count = 0;
  st.meas_qr = class_overlap_sum(q, r, pq, pr, gq, gr, nullptr, nullptr);
  Rational mq = Rational(2) * pq;
  Rational mr = Rational(2) * pr;
  Rational dq = mq / Rational(q);
  Rational dr = mr / Rational(r);
  st.delta_min = dq < dr ? dq : dr;
  st.Delta_max = dq < dr ? dr : dq;
  long g = std::gcd(q, r);
  st.bound_val = Rational(2) * mq * mr + make_rational(g, q) * mq;
  if (sgn(st.Delta_max) > 0) st.n_count = count_N(q, r, st.Delta_max, gq, gr);
  st.verdict = st.meas_qr <= st.bound_val;
  return st;
}

long count_N(long q, long r, const Rational& Delta, const Rational& gamma_q,
             const Rational& gamma_r) {
  if (q < 1 || r < 1) throw UsageError("count_N needs q, r >= 1");
  if (sgn(Delta) <= 0) throw UsageError("count_N needs Delta > 0");
  long g = std::gcd(q, r);
  long P = q / g;
  long qr = checked_mul(q, r, "q*r");
  Rational thetaN = Rational(r) * gamma_q - Rational(q) * gamma_r;
  Rational W = Delta * Rational(qr);
  // strict window on t = r a - q b (a multiple of g): |t + thetaN| < W
  Integer jlo_i = floor_rat((-thetaN - W) / Rational(g)) + 1;
  Integer jhi_i = ceil_rat((-thetaN + W) / Rational(g)) - 1;
  long jmin = cdiv_long(r - qr, g);  // from a >= 1, b <= r
  long jmax = fdiv_long(qr - q, g);  // from a <= q, b >= 1
  if (jhi_i < jmin || jlo_i > jmax) return 0;
  long jlo = jlo_i <= jmin ? jmin : jlo_i.get_si();
  long jhi = jhi_i >= jmax ? jmax : jhi_i.get_si();
  long inv = mod_inverse((r / g) % P, P);
  long count = 0;
  for (long j = jlo; j <= jhi; ++j) {
    long t0 = g * j;
    long alo = cdiv_long(t0 + q, r);   // from b <= r
    long ahi = fdiv_long(t0 + qr, r);  // from b >= 1
    if (alo < 1) alo = 1;
    if (ahi > q) ahi = q;
    if (alo > ahi) continue;
    long a0 = ((j % P) + P) % P * inv % P;
    // a in [alo, ahi] congruent to a0 mod P
    count += fdiv_long(ahi - a0, P) - fdiv_long(alo - 1 - a0, P);
  }
  return count;
}

long count_M(long q, long r, const PsiSpec& psi, const GammaValue& gamma) {
  if (r < 1 || r >= q) throw UsageError("count_M needs 1 <= r < q");
  Rational tau_r = Rational(2) * Rational(r) * psi.eval(q);
  if (sgn(tau_r) <= 0) return 0;
  SqSet sq = build_Sq(q, dirichlet_reduce(gamma, q));
  SqSet sr = build_Sq(r, dirichlet_reduce(gamma, r));
  std::vector<char> in_q(static_cast<std::size_t>(q), 0);
  std::vector<char> in_r(static_cast<std::size_t>(r), 0);
  for (long a : sq.members) in_q[static_cast<std::size_t>(a)] = 1;
  for (long b : sr.members) in_r[static_cast<std::size_t>(b)] = 1;
  long g = std::gcd(q, r);
  long P = q / g;
  long inv = mod_inverse((r / g) % P, P);
  // conservative window from the target bracket; exact check per class
  auto br = target_bracket(gamma, 64);
  Rational wlo = Rational(q - r) * br.first - tau_r;
  Rational whi = Rational(q - r) * br.second + tau_r;
  Integer jlo_i = floor_rat(wlo / Rational(g));
  Integer jhi_i = ceil_rat(whi / Rational(g));
  long jmin = cdiv_long(-q * (r - 1), g);
  long jmax = fdiv_long(r * (q - 1), g);
  if (jhi_i < jmin || jlo_i > jmax) return 0;
  long jlo = jlo_i <= jmin ? jmin : jlo_i.get_si();
  long jhi = jhi_i >= jmax ? jmax : jhi_i.get_si();
  long count = 0;
  for (long j = jlo; j <= jhi; ++j) {
    long t0 = g * j;
    // one exact threshold test covers the whole class
    if (!abs_lt_exact(t0, r - q, gamma, tau_r)) continue;
    long a0 = ((j % P) + P) % P * inv % P;
    for (long i = 0; i < g; ++i) {
      long a = a0 + i * P;
      if (!in_q[static_cast<std::size_t>(a)]) continue;
      long b = (r * a - t0) / q;
      if (b < 0 || b >= r || !in_r[static_cast<std::size_t>(b)]) continue;
      ++count;
    }
  }
  return count;
}

long count_Ndelta(long q, long r, const Rational& delta_exp,
                  const GammaValue& gamma) {
  if (q < 1 || r < 1) throw UsageError("count_Ndelta needs q, r >= 1");
  static const Rational quarter = make_rational(1, 4);
  if (sgn(delta_exp) <= 0 || delta_exp > quarter)
    throw UsageError("count_Ndelta needs 0 < delta_exp <= 1/4");
  long g = std::gcd(q, r);
  SqSet sq = build_Sq(q, dirichlet_reduce(gamma, q));
  unsigned long s_exp = 0;
  Rational gp;
  if (g > 1) {
    if (!delta_exp.get_den().fits_ulong_p())
      throw UsageError("delta exponent denominator too large");
    s_exp = delta_exp.get_den().get_ui();
    gp = Rational(pow_int(Integer(g), delta_exp.get_num().get_ui()));
  }
  long coeff = r - q;
  long count = 0;
  for (long a : sq.members) {
    long ra = checked_mul(r, a, "r*a");
    // threshold g^delta <= q, so only the floor's two neighbours qualify
    auto fr = center_floor_range(ra, coeff, q, gamma);
    long blo = std::max(0L, fr.first - 1);
    long bhi = std::min(r - 1, fr.second + 1);
    for (long b = blo; b <= bhi; ++b) {
      long base = ra - q * b;
      bool hit = g == 1 ? abs_lt_exact(base, coeff, gamma, Rational(1))
                        : abs_pow_lt(base, coeff, gamma, s_exp, gp);
      if (hit) ++count;
    }
  }
  return count;
}

namespace {

// scaled-integer bracket of a target: gamma in [lo, hi] / s
struct ScaledTargetBits {
  bool usable = false;
  bool exact = false;
  bool pow2 = false;  // s == 2^kBracketBits
  i128 s = 1;
  i128 lo = 0;
  i128 hi = 0;
};

ScaledTargetBits scale_target(const GammaValue& gamma, unsigned bits,
                              unsigned max_den_bits) {
  ScaledTargetBits out;
  static const Rational four(4);
  if (const Rational* g0 = rational_target(gamma)) {
    Rational a = sgn(*g0) < 0 ? Rational(-*g0) : *g0;
    if (a <= four &&
        mpz_sizeinbase(g0->get_den().get_mpz_t(), 2) <= max_den_bits) {
      out.usable = true;
      out.exact = true;
      out.s = to_i128(Integer(g0->get_den()));
      out.lo = out.hi = to_i128(Integer(g0->get_num()));
      return out;
    }
  }
  auto br = target_bracket(gamma, bits);
  Rational blo = br.first, bhi = br.second;
  if (blo < -four || bhi > four) return out;
  out.usable = true;
  out.pow2 = true;
  out.s = static_cast<i128>(1) << bits;
  Integer two_b = Integer(1) << bits;
  out.lo = to_i128(floor_rat(blo * Rational(two_b)));
  out.hi = to_i128(ceil_rat(bhi * Rational(two_b)));
  return out;
}

std::vector<long> divisors_of(long q) {
  std::vector<long> divs;
  for (long d = 1; d * d <= q; ++d) {
    if (q % d != 0) continue;
    divs.push_back(d);
    if (d != q / d) divs.push_back(q / d);
  }
  std::sort(divs.begin(), divs.end());
  return divs;
}

}  // namespace

LemNReport lemN_verify(long q, const Rational& delta_exp,
                       const GammaValue& gamma) {
  if (q < 2) throw UsageError("lemN_verify needs q >= 2");
  static const Rational quarter = make_rational(1, 4);
  if (sgn(delta_exp) <= 0 || delta_exp > quarter)
    throw UsageError("lemN_verify needs 0 < delta_exp <= 1/4");
  if (!delta_exp.get_den().fits_ulong_p())
    throw UsageError("delta exponent denominator too large");
  unsigned long s_exp = delta_exp.get_den().get_ui();
  long p_num = delta_exp.get_num().get_si();
  LemNReport rep;
  rep.q = q;
  rep.delta_exp = delta_exp;
  std::vector<long> divs = divisors_of(q);
  std::vector<long> sums(divs.size(), 0);
  // per-divisor thresholds d^delta, bracketed outward at 2^-kLemBracketBits
  struct Thr {
    i128 lo_s = 0;
    i128 hi_s = 0;
    Rational gp;
  };
  std::vector<Thr> thrs(divs.size());
  Integer two_lb = Integer(1) << kLemBracketBits;
  for (std::size_t i = 0; i < divs.size(); ++i) {
    if (divs[i] == 1) {
      thrs[i].lo_s = thrs[i].hi_s = static_cast<i128>(1) << kLemBracketBits;
      thrs[i].gp = Rational(1);
      continue;
    }
    FloatInterval t = FloatInterval::from_long(divs[i]).pow_rat(p_num, s_exp);
    thrs[i].lo_s = to_i128(floor_rat(t.lo_rational() * Rational(two_lb)));
    thrs[i].hi_s = to_i128(ceil_rat(t.hi_rational() * Rational(two_lb)));
    thrs[i].gp =
        Rational(pow_int(Integer(divs[i]), static_cast<unsigned long>(p_num)));
  }
  SqSet sq = build_Sq(q, dirichlet_reduce(gamma, q));
  ScaledTargetBits st = q <= (1L << 26)
                            ? scale_target(gamma, kLemBracketBits, 60)
                            : ScaledTargetBits{};
  for (long r = 1; r < q; ++r) {
    long g = std::gcd(q, r);
    std::size_t row = static_cast<std::size_t>(
        std::lower_bound(divs.begin(), divs.end(), g) - divs.begin());
    if (!st.usable) {
      sums[row] += count_Ndelta(q, r, delta_exp, gamma);
      continue;
    }
    const Thr& thr = thrs[row];
    long coeff = r - q;
    i128 qs = static_cast<i128>(q) * st.s;
    i128 tlo = static_cast<i128>(coeff) * st.hi;
    i128 thi = static_cast<i128>(coeff) * st.lo;
    // |L| at or above this scaled cutoff certainly fails the threshold
    i128 prune = (static_cast<i128>(thr.hi_s >> kLemBracketBits) + 2) * st.s;
    long cnt = 0;
    for (long a : sq.members) {
      i128 ras = static_cast<i128>(r) * a * st.s;
      i128 xlo = ras + tlo;
      i128 xhi = ras + thi;
      long blo = static_cast<long>(fdiv_i128(xlo, qs)) - 1;
      long bhi = static_cast<long>(fdiv_i128(xhi, qs)) + 1;
      if (blo < 0) blo = 0;
      if (bhi > r - 1) bhi = r - 1;
      for (long b = blo; b <= bhi; ++b) {
        i128 off = static_cast<i128>(b) * qs;
        i128 llo = xlo - off;
        i128 lhi = xhi - off;
        i128 alo, ahi;
        if (llo >= 0) {
          alo = llo;
          ahi = lhi;
        } else if (lhi <= 0) {
          alo = -lhi;
          ahi = -llo;
        } else {
          alo = 0;
          ahi = lhi > -llo ? lhi : -llo;
        }
        if (alo >= prune) continue;
        if ((ahi << kLemBracketBits) < thr.lo_s * st.s) {
          ++cnt;
          continue;
        }
        if ((alo << kLemBracketBits) >= thr.hi_s * st.s) continue;
        // bracket undecided: fall back to the exact comparison
        long base = r * a - q * b;
        bool hit = g == 1 ? abs_lt_exact(base, coeff, gamma, Rational(1))
                          : abs_pow_lt(base, coeff, gamma, s_exp, thr.gp);
        if (hit) ++cnt;
      }
    }
    sums[row] += cnt;
  }
  rep.rows.reserve(divs.size());
  for (std::size_t i = 0; i < divs.size(); ++i) {
    FloatInterval ref = FloatInterval::from_long(q) *
                            FloatInterval::from_long(divs[i]).pow_rat(-1, 4) +
                        FloatInterval::from_long(divs[i]);
    FloatInterval ratio = FloatInterval::from_long(sums[i]) / ref;
    rep.rows.push_back(LemNRow{divs[i], sums[i], ref, ratio});
    if (ratio.hi_rational() > rep.rows[rep.max_row].ratio.hi_rational())
      rep.max_row = i;
  }
  return rep;
}

namespace {

struct SMasks {
  long q_max = 0;
  std::vector<std::uint64_t> words;
  std::vector<std::size_t> off;
  std::vector<long> count;
  MaskView view(long q) const {
    return MaskView{&words, off[static_cast<std::size_t>(q)]};
  }
  bool test(long q, long a) const {
    return (words[off[static_cast<std::size_t>(q)] +
                  static_cast<std::size_t>(a >> 6)] >>
            (a & 63)) &
           1;
  }
};

SMasks build_smasks(long q_max, const GammaValue& gamma, unsigned threads) {
  SMasks m;
  m.q_max = q_max;
  m.off.resize(static_cast<std::size_t>(q_max) + 1, 0);
  m.count.resize(static_cast<std::size_t>(q_max) + 1, 0);
  std::size_t total = 0;
  for (long q = 1; q <= q_max; ++q) {
    m.off[static_cast<std::size_t>(q)] = total;
    total += static_cast<std::size_t>(q / 64 + 1);
  }
  m.words.assign(total, 0);
  parallel_blocks(static_cast<std::size_t>(q_max), threads,
                  [&](std::size_t bi) {
                    long q = static_cast<long>(bi) + 1;
                    SqSet s = build_Sq(q, dirichlet_reduce(gamma, q));
                    m.count[static_cast<std::size_t>(q)] =
                        static_cast<long>(s.members.size());
                    std::size_t base = m.off[static_cast<std::size_t>(q)];
                    for (long a : s.members)
                      m.words[base + static_cast<std::size_t>(a >> 6)] |=
                          std::uint64_t(1) << (a & 63);
                  });
  return m;
}

std::vector<long> grid_points(long q_max) {
  std::vector<long> pts;
  for (long p = 1; p <= q_max && p > 0; p *= 2) pts.push_back(p);
  if (pts.back() != q_max) pts.push_back(q_max);
  return pts;
}

// per-q slot of the exact sweep: diagonal + 2 * (r = 1) + 2 * sum over
// 2 <= r < q, everything an exact rational
Rational exact_qia_slot(long q, const SMasks& masks,
                        const std::vector<Rational>& psiv,
                        const Rational& gamma) {
  const Rational& pq = psiv[static_cast<std::size_t>(q)];
  long cq = masks.count[static_cast<std::size_t>(q)];
  if (sgn(pq) == 0 || cq == 0) return Rational(0);
  std::vector<Rational> terms;
  Rational diag = Rational(2 * cq) * pq / Rational(q);
  terms.push_back(diag);
  const Rational& p1 = psiv[1];
  if (sgn(p1) > 0 && masks.count[1] > 0) {
    Rational two_p1 = Rational(2) * p1;
    Rational r1;
    if (two_p1 >= 1) {
      r1 = diag;  // the scale-1 arc saturates the circle
    } else {
      std::vector<Rational> ov1;
      Rational u = pq / Rational(q);
      for (long a = 0; a < q; ++a) {
        if (!masks.test(q, a)) continue;
        Rational x =
            mod1((Rational(a) + Rational(1 - q) * gamma) / Rational(q));
        Rational d = Rational(1) - x;
        if (x < d) d = x;
        Rational ov = arc_overlap(u, p1, d);
        if (sgn(ov) > 0) ov1.push_back(ov);
      }
      r1 = sum_exact(std::move(ov1));
    }
    terms.push_back(Rational(2) * r1);
  }
  MaskView mq = masks.view(q);
  for (long r = 2; r < q; ++r) {
    const Rational& pr = psiv[static_cast<std::size_t>(r)];
    if (sgn(pr) == 0) continue;
    MaskView mr = masks.view(r);
    Rational c = class_overlap_sum(q, r, pq, pr, gamma, gamma, &mq, &mr);
    if (sgn(c) > 0) terms.push_back(Rational(2) * c);
  }
  return sum_exact(std::move(terms));
}

struct ScaledLegs {
  i128 lo = 0;
  i128 hi = 0;
};

// floor / ceil of num * 2^kFixedBits / (q^2 r^2 s); requires num >= 0 and
// num <= 2 q^2 r^2 s (a pair measure at that scale), which keeps every
// intermediate inside 128 bits
i128 fixed_scale_div(i128 num, long q, long r, const ScaledTargetBits& st,
                     bool up) {
  if (st.pow2) {
    // s = 2^kBracketBits, so this is num * 2^16 / (q^2 r^2) exactly
    i128 d = static_cast<i128>(q) * q * r * r;
    constexpr unsigned shift = kFixedBits - kBracketBits;
    i128 hi = num / d;
    i128 tail = (num % d) << shift;
    return (hi << shift) + (up ? cdiv_i128(tail, d) : tail / d);
  }
  // schoolbook base-2^32 long division by q^2 r^2 s
  i128 d = static_cast<i128>(q) * q * r * r * static_cast<long>(st.s);
  i128 out = num / d;
  i128 rem = num % d;
  for (int step = 0; step < 3; ++step) {
    rem <<= 32;
    if (up && step == 2) rem += d - 1;
    out = (out << 32) + rem / d;
    rem %= d;
  }
  return out;
}

// cross terms 2 <= r < q of the scaled sweep for psi = 1/q, at per-pair
// scale q^2 r^2 s: outward in the target bracket, exact otherwise. The
// class walk keeps (a, b) members incrementally, so the inner loop has no
// division. I is int64 when the scale fits, int128 otherwise.
template <typename I>
ScaledLegs scaled_qia_slot(long q, const SMasks& masks,
                           const ScaledTargetBits& st) {
  ScaledLegs legs;
  const I s = static_cast<I>(st.s);
  const I slo = static_cast<I>(st.lo);
  const I shi = static_cast<I>(st.hi);
  for (long r = 2; r < q; ++r) {
    long g = std::gcd(q, r);
    long P = q / g;
    long inv = mod_inverse((r / g) % P, P);
    long rg = r / g;
    long c1 = (r * inv - g) / q;  // exact: r * inv == g (mod q)
    long jcap = q / g * r - 1;
    I qr = static_cast<I>(q) * r;
    I qrs = qr * s;
    I qrs2 = 2 * qrs;
    I gs = static_cast<I>(g) * s;
    // theta = (r - q) gamma reduced mod qr, so anchors {0, qr, 2qr} cover
    // every near-integer class
    I th_lo = static_cast<I>(r - q) * shi;
    I th_hi = static_cast<I>(r - q) * slo;
    I shift = fdiv_any<I>(th_lo, qrs) * qrs;
    th_lo -= shift;
    th_hi -= shift;
    I span = th_hi - th_lo;
    I us = static_cast<I>(r) * r * s;  // u = 1/q^2 at scale q^2 r^2 s
    I vs = static_cast<I>(q) * q * s;  // v = 1/r^2
    I cap = 2 * us;
    I uv = us + vs;
    I dmax = cdiv_any<I>(uv, qr) + 1;  // distances past this overlap nothing
    I W = cdiv_any<I>(static_cast<I>(r) * s, q) +
          cdiv_any<I>(static_cast<I>(q) * s, r) + span + 2;
    I pair_lo = 0, pair_hi = 0;
    long j_prev = -1;
    for (int k = 0; k <= 2; ++k) {
      I center = static_cast<I>(k) * qrs;
      I jlo_w = fdiv_any<I>(center - th_hi - W, gs);
      I jhi_w = cdiv_any<I>(center - th_lo + W, gs);
      if (jlo_w < 0) jlo_w = 0;
      if (jhi_w > static_cast<I>(jcap)) jhi_w = static_cast<I>(jcap);
      long jlo = static_cast<long>(jlo_w);
      long jhi = static_cast<long>(jhi_w);
      if (jlo <= j_prev) jlo = j_prev + 1;
      if (jlo > jhi) continue;
      j_prev = jhi;
      long a0 = static_cast<long>(static_cast<i128>(jlo % P) * inv % P);
      long b0 = (r * a0 - g * jlo) / q % r;
      if (b0 < 0) b0 += r;
      I xlo = static_cast<I>(jlo) * gs + th_lo;
      I xhi = xlo + span;
      for (long j = jlo;;) {
        // circle distance to the nearest anchor, as an interval
        I dlo, dhi, tl, th;
        if (xlo >= 0) {
          dlo = xlo;
          dhi = xhi;
        } else if (xhi <= 0) {
          dlo = -xhi;
          dhi = -xlo;
        } else {
          dlo = 0;
          dhi = xhi > -xlo ? xhi : -xlo;
        }
        I ylo = xlo - qrs, yhi = xhi - qrs;
        if (ylo >= 0) {
          tl = ylo;
          th = yhi;
        } else if (yhi <= 0) {
          tl = -yhi;
          th = -ylo;
        } else {
          tl = 0;
          th = yhi > -ylo ? yhi : -ylo;
        }
        if (tl < dlo) dlo = tl;
        if (th < dhi) dhi = th;
        ylo = xlo - qrs2;
        yhi = xhi - qrs2;
        if (ylo >= 0) {
          tl = ylo;
          th = yhi;
        } else if (yhi <= 0) {
          tl = -yhi;
          th = -ylo;
        } else {
          tl = 0;
          th = yhi > -ylo ? yhi : -ylo;
        }
        if (tl < dlo) dlo = tl;
        if (th < dhi) dhi = th;
        if (dlo < dmax) {
          I ovh = uv - dlo * qr;
          if (ovh > 0) {
            if (ovh > cap) ovh = cap;
            I ovl = 0;
            if (dhi < dmax) {
              ovl = uv - dhi * qr;
              if (ovl > cap) ovl = cap;
              if (ovl < 0) ovl = 0;
            }
            long n = 0;
            long a = a0, b = b0;
            for (long i = 0; i < g; ++i) {
              if (masks.test(q, a) && masks.test(r, b)) ++n;
              a += P;
              b += rg;
              if (b >= r) b -= r;
            }
            if (n > 0) {
              pair_lo += static_cast<I>(n) * ovl;
              pair_hi += static_cast<I>(n) * ovh;
            }
          }
        }
        if (j == jhi) break;
        ++j;
        xlo += gs;
        xhi += gs;
        a0 += inv;
        if (a0 >= P) {
          a0 -= P;
          b0 -= rg;
        }
        b0 += c1;
        if (b0 < 0) b0 += r;
        if (b0 >= r) b0 -= r;
      }
    }
    if (pair_hi <= 0) continue;
    legs.lo += fixed_scale_div(static_cast<i128>(pair_lo), q, r, st, false);
    legs.hi += fixed_scale_div(static_cast<i128>(pair_hi), q, r, st, true);
  }
  return legs;
}

}  // namespace

std::vector<QiaPoint> qia_grid(long q_max, const PsiSpec& psi,
                               const GammaValue& gamma, QiaMode mode,
                               unsigned threads) {
  if (q_max < 1) throw UsageError("qia needs Q >= 1");
  const Rational* grat = rational_target(gamma);
  if (mode == QiaMode::kAuto) {
    if (psi.exact() && grat != nullptr && q_max <= kQiaExactCap)
      mode = QiaMode::kExactPairs;
    else if (psi.is_reciprocal())
      mode = QiaMode::kScaledBounds;
    else
      throw UsageError(
          "no eligible qia mode: exact pairs need an exact psi, a rational "
          "target and Q <= 4096; scaled bounds need psi = 1/q");
  }
  if (!psi.exact())
    throw UsageError("qia needs an exactly evaluable psi kind");
  if (mode == QiaMode::kExactPairs) {
    if (grat == nullptr)
      throw UsageError("exact qia mode needs a rational target");
    if (q_max > kQiaExactCap)
      throw UsageError("exact qia mode caps at Q = " +
                       std::to_string(kQiaExactCap) +
                       "; use the scaled mode beyond");
  } else if (!psi.is_reciprocal()) {
    throw UsageError("scaled qia mode needs psi = 1/q");
  }
  if (!psi.check_decreasing(1, q_max))
    throw UsageError("qia needs a decreasing psi");
  std::vector<Rational> psiv(static_cast<std::size_t>(q_max) + 1);
  for (long q = 1; q <= q_max; ++q) {
    psiv[static_cast<std::size_t>(q)] = psi.eval(q);
    Rational prod = psiv[static_cast<std::size_t>(q)] * Rational(q);
    if (prod > 1)
      throw UsageError("qia needs psi(q) <= 1/q; violated at q = " +
                       std::to_string(q));
  }
  SMasks masks = build_smasks(q_max, gamma, threads);
  std::vector<Rational> slots(static_cast<std::size_t>(q_max) + 1, Rational(0));
  std::vector<ScaledLegs> legs(static_cast<std::size_t>(q_max) + 1);
  if (masks.count[1] > 0) {
    Rational two_p1 = Rational(2) * psiv[1];
    slots[1] = two_p1 > 1 ? Rational(1) : two_p1;
  }
  if (q_max >= 2) {
    if (mode == QiaMode::kExactPairs) {
      Rational g0 = *grat;
      parallel_blocks(static_cast<std::size_t>(q_max - 1), threads,
                      [&](std::size_t bi) {
                        long q = static_cast<long>(bi) + 2;
                        slots[static_cast<std::size_t>(q)] =
                            exact_qia_slot(q, masks, psiv, g0);
                      });
    } else {
      ScaledTargetBits st = scale_target(gamma, kBracketBits, 36);
      if (!st.usable)
        throw UsageError("scaled qia mode needs |target| <= 4");
      i128 qm = q_max;
      // int64 class walk is safe while the max term 2 q^3 s stays under 2^62
      bool narrow =
          st.s <= (static_cast<i128>(1) << 61) / (2 * qm * qm * qm + 1);
      long w1 = masks.count[1] > 0 ? 6 : 2;
      parallel_blocks(
          static_cast<std::size_t>(q_max - 1), threads, [&](std::size_t bi) {
            long q = static_cast<long>(bi) + 2;
            // diagonal 2c/q^2 plus, when S(1) is nonempty, both (q, 1)
            // pairs: the scale-1 arc is the full circle for psi(1) = 1
            slots[static_cast<std::size_t>(q)] =
                make_rational(w1 * masks.count[static_cast<std::size_t>(q)],
                              checked_mul(q, q, "q*q"));
            legs[static_cast<std::size_t>(q)] =
                narrow ? scaled_qia_slot<long long>(q, masks, st)
                       : scaled_qia_slot<i128>(q, masks, st);
          });
    }
  }
  std::vector<long> pts = grid_points(q_max);
  std::vector<QiaPoint> out;
  out.reserve(pts.size());
  Rational exact_run(0), psi_run(0);
  i128 flo_run = 0, fhi_run = 0;
  std::vector<Rational> eterms, pterms;
  std::size_t pi = 0;
  const Rational fixed_ulp = pow2_rat(-static_cast<long>(kFixedBits));
  for (long q = 1; q <= q_max && pi < pts.size(); ++q) {
    eterms.push_back(slots[static_cast<std::size_t>(q)]);
    pterms.push_back(psiv[static_cast<std::size_t>(q)]);
    flo_run += legs[static_cast<std::size_t>(q)].lo;
    fhi_run += legs[static_cast<std::size_t>(q)].hi;
    if (q != pts[pi]) continue;
    exact_run += sum_exact(std::move(eterms));
    eterms.clear();
    psi_run += sum_exact(std::move(pterms));
    pterms.clear();
    if (sgn(psi_run) == 0)
      throw UsageError("qia needs a psi not identically zero");
    QiaPoint pt;
    pt.Q = q;
    pt.psi_sum = psi_run;
    pt.num_lo =
        exact_run + Rational(2) * Rational(from_i128(flo_run)) * fixed_ulp;
    pt.num_hi =
        exact_run + Rational(2) * Rational(from_i128(fhi_run)) * fixed_ulp;
    pt.exact = pt.num_lo == pt.num_hi;
    Rational ps2 = psi_run * psi_run;
    pt.rho_lo = pt.num_lo / ps2;
    pt.rho_hi = pt.num_hi / ps2;
    out.push_back(pt);
    ++pi;
  }
  return out;
}

QiaPoint qia_ratio(long Q, const PsiSpec& psi, const GammaValue& gamma,
                   QiaMode mode, unsigned threads) {
  return qia_grid(Q, psi, gamma, mode, threads).back();
}

}  // namespace diolab
