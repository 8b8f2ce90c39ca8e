// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <functional>
#include <numeric>
#include <utility>
#include <vector>

#include "diolab/arith_stats.hpp"
#include "diolab/enclosure.hpp"
#include "diolab/errors.hpp"
#include "diolab/interval_set.hpp"
#include "diolab/limsup.hpp"
#include "diolab/quad.hpp"
#include "diolab/rational.hpp"
#include "diolab/rng.hpp"
#include "diolab/scenarios.hpp"
#include "diolab/schmidt.hpp"

using namespace diolab;

namespace {

Rational half() { return make_rational(1, 2); }

TargetSeq gamma_const(const Rational& g) {
  return TargetSeq::constant(GammaValue(g));
}

std::function<Rational(long, long)> const_pair(const Rational& v) {
  return [v](long, long) -> Rational { return v; };
}

// ||ell|| < thr decided in exact quadratic arithmetic.
bool quad_hit(const Quad& ell, const Rational& thr) {
  Quad m = ell.mod1();
  Quad flip = m * Rational(-1) + Rational(1);
  const Quad& d = m.cmp(flip) <= 0 ? m : flip;
  return d.cmp(thr) < 0;
}

}  // namespace

TEST_CASE("OverlapMatrix snapshots pair sums on a doubling grid") {
  auto m = OverlapMatrix::from_tables(std::vector<Rational>(32, half()),
                                      const_pair(half()));
  CHECK(m.Q() == 32);
  CHECK(m.grid() == std::vector<long>{1, 2, 4, 8, 16, 32});
  for (long k = 1; k <= 32; ++k) CHECK(m.mu_sum(k) == make_rational(k, 2));
  // one set repeated: the ratio is the measure of that set at every scale
  for (long g : m.grid()) CHECK(bc_lower_bound(m, g) == half());
  CHECK(chung_erdos_bound(m) == half());

  auto m48 = OverlapMatrix::from_tables(std::vector<Rational>(48, half()),
                                        const_pair(half()));
  CHECK(m48.grid() == std::vector<long>{1, 2, 4, 8, 16, 32, 48});
}

TEST_CASE("OverlapMatrix from_tables and from_sets agree on parity blocks") {
  // A_q alternates between the two halves of the circle
  auto parity_pair = [](long q, long r) -> Rational {
    return (q - r) % 2 == 0 ? make_rational(1, 2) : Rational(0);
  };
  auto mt = OverlapMatrix::from_tables(std::vector<Rational>(32, half()),
                                       parity_pair);
  CHECK(bc_lower_bound(mt, 1) == half());
  // even prefixes split evenly, so the second moment bound is attained
  for (long g : mt.grid())
    if (g % 2 == 0) CHECK(bc_lower_bound(mt, g) == 1);

  CircleIntervalSet low = CircleIntervalSet::normalize({{Rational(0), half()}});
  CircleIntervalSet high = CircleIntervalSet::normalize({{half(), Rational(1)}});
  std::vector<CircleIntervalSet> sets;
  for (long q = 1; q <= 32; ++q) sets.push_back(q % 2 == 1 ? low : high);
  auto ms = OverlapMatrix::from_sets(sets);
  CHECK(ms.grid() == mt.grid());
  CHECK(ms.mu() == mt.mu());
  for (long g : mt.grid()) CHECK(ms.pair_sum(g) == mt.pair_sum(g));
}

TEST_CASE("OverlapMatrix tracks a seeded Bernoulli simulation") {
  // 2048-point discrete space, each A_q an independent-looking coin-flip mask
  const long Q = 128;
  SeededStream st(20260815, "bc-bernoulli");
  std::vector<std::array<std::uint64_t, 32>> words(
      static_cast<std::size_t>(Q) + 1);
  std::vector<Rational> mu;
  for (long q = 1; q <= Q; ++q) {
    long bits = 0;
    for (std::uint64_t w = 0; w < 32; ++w) {
      std::uint64_t v = st.at(static_cast<std::uint64_t>(q) * 32 + w);
      words[static_cast<std::size_t>(q)][w] = v;
      bits += std::popcount(v);
    }
    mu.push_back(make_rational(bits, 2048));
  }
  auto pair_fn = [&words](long q, long r) -> Rational {
    long bits = 0;
    for (std::uint64_t w = 0; w < 32; ++w)
      bits += std::popcount(words[static_cast<std::size_t>(q)][w] &
                            words[static_cast<std::size_t>(r)][w]);
    return make_rational(bits, 2048);
  };
  auto m = OverlapMatrix::from_tables(mu, pair_fn);
  CHECK(m.grid() == std::vector<long>{1, 2, 4, 8, 16, 32, 64, 128});
  Rational prev(-1);
  for (long g : m.grid()) {
    Rational b = bc_lower_bound(m, g);
    CHECK(b > prev);
    CHECK(b <= 1);
    prev = b;
  }
  CHECK(bc_lower_bound(m, 128) == make_rational(4287237529L, 4320777216L));
  CHECK(chung_erdos_bound(m) == bc_lower_bound(m, 128));
}

TEST_CASE("overlap ratio bounds reject malformed inputs") {
  auto zero_pair = const_pair(Rational(0));
  CHECK_THROWS_AS(OverlapMatrix::from_tables({make_rational(3, 2)}, zero_pair),
                  UsageError);
  CHECK_THROWS_AS(OverlapMatrix::from_tables({Rational(-1)}, zero_pair),
                  UsageError);
  // pair measure may not exceed the smaller member
  CHECK_THROWS_AS(
      OverlapMatrix::from_tables({make_rational(1, 4), make_rational(1, 8)},
                                 const_pair(make_rational(1, 4))),
      UsageError);
  CHECK_THROWS_AS(
      OverlapMatrix::from_tables({make_rational(1, 4), make_rational(1, 8)},
                                 const_pair(make_rational(-1, 8))),
      UsageError);

  auto empty = OverlapMatrix::from_tables({}, zero_pair);
  CHECK(empty.Q() == 0);
  CHECK_THROWS_AS(chung_erdos_bound(empty), UsageError);

  auto null = OverlapMatrix::from_tables({Rational(0), Rational(0)}, zero_pair);
  CHECK_THROWS_AS(bc_lower_bound(null, 2), UsageError);
  CHECK_THROWS_AS(chung_erdos_bound(null), UsageError);

  auto m = OverlapMatrix::from_tables(std::vector<Rational>(32, half()),
                                      const_pair(half()));
  CHECK_THROWS_AS(bc_lower_bound(m, 3), UsageError);   // off the grid
  CHECK_THROWS_AS(bc_lower_bound(m, 0), UsageError);
  CHECK_THROWS_AS(bc_lower_bound(m, 33), UsageError);
  CHECK_THROWS_AS(m.mu_sum(0), UsageError);
  CHECK_THROWS_AS(m.mu_sum(33), UsageError);
  CHECK_THROWS_AS(m.pair_sum(3), UsageError);
}

TEST_CASE("chung_erdos_bound is tight on hand-built unions") {
  auto zero_pair = const_pair(Rational(0));
  auto single = OverlapMatrix::from_tables({make_rational(1, 3)}, zero_pair);
  CHECK(chung_erdos_bound(single) == make_rational(1, 3));

  // disjoint sets: (a+b)^2 / (a+b) recovers the union measure exactly
  auto disjoint = OverlapMatrix::from_tables(
      {make_rational(1, 4), make_rational(1, 8)}, zero_pair);
  CHECK(chung_erdos_bound(disjoint) == make_rational(3, 8));

  // q = 2, 4 with gamma = 0, psi = 1/8: overlap 1/8, union 3/8
  CircleIntervalSet a2 = target_set(2, Rational(0), make_rational(1, 8));
  CircleIntervalSet a4 = target_set(4, Rational(0), make_rational(1, 8));
  auto m = OverlapMatrix::from_sets({a2, a4});
  CHECK(m.mu()[0] == make_rational(1, 4));
  CHECK(m.mu()[1] == make_rational(1, 4));
  CHECK(chung_erdos_bound(m) == make_rational(1, 3));
  Rational uni = unite(a2, a4).measure();
  CHECK(uni == make_rational(3, 8));
  CHECK(chung_erdos_bound(m) <= uni);
}

TEST_CASE("from_circle agrees with interval-set intersections") {
  const Rational third = make_rational(1, 3);

  PsiSpec spow = PsiSpec::power(half(), Rational(1));
  auto mp = OverlapMatrix::from_circle(64, spow, gamma_const(third), 3);
  std::vector<CircleIntervalSet> pow_sets;
  for (long q = 1; q <= 64; ++q)
    pow_sets.push_back(target_set(q, third, make_rational(1, 2 * q)));
  auto mp_dual = OverlapMatrix::from_sets(pow_sets);
  CHECK(mp.grid() == mp_dual.grid());
  CHECK(mp.mu() == mp_dual.mu());
  for (long g : mp.grid()) CHECK(mp.pair_sum(g) == mp_dual.pair_sum(g));
  Rational prev(0);
  for (long g : mp.grid()) {
    Rational ps = mp.pair_sum(g);
    CHECK(ps >= mp.mu_sum(g));  // the diagonal alone reaches the measure sum
    CHECK(ps >= prev);
    prev = ps;
    Rational b = bc_lower_bound(mp, g);
    CHECK(sgn(b) > 0);
    CHECK(b <= 1);
  }
  CHECK(rational_to_decimal(chung_erdos_bound(mp), 8) == "0.89738079");

  // psi(1) = 1 exceeds the arc cap, so A_1 is the full circle
  auto mr = OverlapMatrix::from_circle(64, PsiSpec::reciprocal(),
                                       gamma_const(third), 2);
  std::vector<CircleIntervalSet> rec_sets{CircleIntervalSet::full()};
  for (long q = 2; q <= 64; ++q)
    rec_sets.push_back(target_set(q, third, make_rational(1, q)));
  auto mr_dual = OverlapMatrix::from_sets(rec_sets);
  CHECK(mr.mu() == mr_dual.mu());
  for (long g : mr.grid()) CHECK(mr.pair_sum(g) == mr_dual.pair_sum(g));
  CHECK(bc_lower_bound(mr, 1) == 1);
  CHECK(bc_lower_bound(mr, 2) == 1);
  CHECK(bc_lower_bound(mr, 4) == make_rational(722, 757));
  CHECK(bc_lower_bound(mr, 8) == make_rational(3470769L, 3730120L));
  CHECK(bc_lower_bound(mr, 16) ==
        make_rational(8621204575202L, 9258743216563L));
  CHECK(rational_to_decimal(bc_lower_bound(mr, 64), 8) == "0.94645463");

  // block decomposition is fixed, so the thread count cannot matter
  auto t1 = OverlapMatrix::from_circle(48, spow, gamma_const(third), 1);
  auto t7 = OverlapMatrix::from_circle(48, spow, gamma_const(third), 7);
  CHECK(t1.grid() == std::vector<long>{1, 2, 4, 8, 16, 32, 48});
  CHECK(t1.mu() == t7.mu());
  for (long g : t1.grid()) CHECK(t1.pair_sum(g) == t7.pair_sum(g));
}

TEST_CASE("from_circle validates ranges and kinds") {
  TargetSeq g0 = gamma_const(Rational(0));
  CHECK_THROWS_AS(OverlapMatrix::from_circle(0, PsiSpec::reciprocal(), g0),
                  UsageError);
  CHECK_THROWS_AS(OverlapMatrix::from_circle(4097, PsiSpec::reciprocal(), g0),
                  UsageError);
  CHECK_THROWS_AS(OverlapMatrix::from_circle(8, PsiSpec::log_tempered(), g0),
                  UsageError);
  TargetSeq surd =
      TargetSeq::constant(GammaValue(Quad(Rational(-1), Rational(1), 2)));
  CHECK_THROWS_AS(OverlapMatrix::from_circle(8, PsiSpec::reciprocal(), surd),
                  UsageError);
  PsiSpec neg = PsiSpec::custom(
      [](long) -> Rational { return make_rational(-1, 8); }, "neg");
  CHECK_THROWS_AS(OverlapMatrix::from_circle(8, neg, g0), UsageError);
}

TEST_CASE("yu_classes partitions by exact dyadic eta compares") {
  auto solo = yu_classes({5}, {Rational(1)}, {Rational(1)});
  CHECK(solo.classes.at(0) == std::vector<long>{5});
  CHECK(solo.sigma_ell.at(0) == 1);
  CHECK(yu_classes({5}, {Rational(2)}, {Rational(1)}).classes.count(1) == 1);
  CHECK(yu_classes({5}, {Rational(4)}, {Rational(1)}).classes.count(2) == 1);
  CHECK(yu_classes({5}, {make_rational(7, 2)}, {Rational(1)}).classes.count(1) ==
        1);

  // eta(2^20) = prod over the single prime: 1 + 20/2
  Rational e20 = eta_gcdsum(std::uint64_t(1) << 20);
  CHECK(e20 == 11);
  auto high = yu_classes({1L << 20}, {e20}, {Rational(1)});
  CHECK(high.classes.at(3) == std::vector<long>{1L << 20});

  std::vector<Rational> w;
  for (long q = 1; q <= 200; ++q) w.push_back(make_rational(1, q));
  auto d = yu_classes_default(200, w);
  CHECK(d.classes.at(0).size() == 47);
  CHECK(d.classes.at(1).size() == 84);
  CHECK(d.classes.at(2).size() == 68);
  CHECK(d.classes.at(3) == std::vector<long>{180});
  CHECK(d.classes.at(0).front() == 1);
  CHECK(d.classes.at(1).front() == 4);
  CHECK(d.classes.at(2).front() == 24);
  CHECK(d.sigma_ell.at(3) == make_rational(1, 180));
  std::size_t total = 0;
  std::vector<Rational> sig;
  for (const auto& [ell, members] : d.classes) {
    total += members.size();
    sig.push_back(d.sigma_ell.at(ell));
    for (long q : members) {
      Rational eta = eta_gcdsum(static_cast<std::uint64_t>(q));
      CHECK(pow2_rat(ell) <= eta);
      CHECK(eta < pow2_rat(ell + 1));
    }
  }
  CHECK(total == 200);
  // the classes partition, so the class weights recover the full series
  CHECK(sum_exact(sig) == sum_exact(w));
  Rational s0 = d.sigma_ell.at(0);
  CHECK(s0 > make_rational(2949033, 1000000));
  CHECK(s0 < make_rational(2949035, 1000000));
  Rational s1 = d.sigma_ell.at(1);
  CHECK(s1 > make_rational(2193044, 1000000));
  CHECK(s1 < make_rational(2193046, 1000000));
  Rational s2 = d.sigma_ell.at(2);
  CHECK(s2 > make_rational(730395, 1000000));
  CHECK(s2 < make_rational(730397, 1000000));

  // the gcd-sum form of eta matches its multiplicative evaluation
  for (long q = 1; q <= 300; ++q) {
    long gsum = 0;
    for (long r = 1; r <= q; ++r) gsum += std::gcd(q, r);
    CHECK(make_rational(gsum, q) == eta_gcdsum(static_cast<std::uint64_t>(q)));
  }

  CHECK_THROWS_AS(yu_classes({5}, {half()}, {Rational(1)}), UsageError);
  CHECK_THROWS_AS(yu_classes({5}, {Rational(1)}, {Rational(-1)}), UsageError);
  CHECK_THROWS_AS(yu_classes({5, 6}, {Rational(1)}, {Rational(1)}), UsageError);
  CHECK_THROWS_AS(yu_classes_default(3, {Rational(1)}), UsageError);
}

TEST_CASE("extra_div_weight brackets the smoothing weights") {
  // ln q <= 1 for q <= 2, so every clamped factor collapses to exactly 1
  FloatInterval w1 = extra_div_weight(1, 2, Rational(1));
  CHECK(w1.lo_rational() == 1);
  CHECK(w1.hi_rational() == 1);
  FloatInterval w2 = extra_div_weight(2, 3, make_rational(1, 4));
  CHECK(w2.lo_rational() == 1);
  CHECK(w2.hi_rational() == 1);

  FloatInterval w55 = extra_div_weight(55, 2, Rational(1));
  CHECK(w55.lo_rational() > make_rational(2592474, 10000000));
  CHECK(w55.hi_rational() < make_rational(2592475, 10000000));

  // certified antitone: upper end at q+1 below lower end at q
  for (long q = 16; q < 300; ++q) {
    CHECK(extra_div_weight(q + 1, 2, Rational(1)).hi_rational() <=
          extra_div_weight(q, 2, Rational(1)).lo_rational());
    CHECK(extra_div_weight(q + 1, 3, make_rational(1, 4)).hi_rational() <=
          extra_div_weight(q, 3, make_rational(1, 4)).lo_rational());
  }

  CHECK_THROWS_AS(extra_div_weight(0, 2, Rational(1)), UsageError);
  CHECK_THROWS_AS(extra_div_weight(5, 1, Rational(1)), UsageError);
  CHECK_THROWS_AS(extra_div_weight(5, 2, Rational(0)), UsageError);
}

TEST_CASE("condensation_partial accumulates dyadic partial sums") {
  std::function<Rational(long)> harmonic = [](long q) -> Rational {
    return make_rational(1, q);
  };
  auto s1 = condensation_partial(harmonic, 20);
  REQUIRE(s1.size() == 21);
  for (int k = 0; k <= 20; ++k) CHECK(s1[static_cast<std::size_t>(k)] == k + 1);

  std::function<Rational(long)> square = [](long q) -> Rational {
    return make_rational(1, q) * make_rational(1, q);
  };
  auto s2 = condensation_partial(square, 20);
  for (int k = 0; k <= 20; ++k)
    CHECK(s2[static_cast<std::size_t>(k)] == Rational(2) - pow2_rat(-k));

  std::function<Rational(long)> flat = [](long) -> Rational {
    return Rational(1);
  };
  auto s3 = condensation_partial(flat, 10);
  for (int k = 0; k <= 10; ++k)
    CHECK(s3[static_cast<std::size_t>(k)] == pow2_rat(k + 1) - 1);

  CHECK_THROWS_AS(condensation_partial(harmonic, -1), UsageError);
  CHECK_THROWS_AS(condensation_partial(harmonic, 63), UsageError);
  std::function<Rational(long)> rising = [](long q) -> Rational {
    return Rational(q);
  };
  CHECK_THROWS_AS(condensation_partial(rising, 10), UsageError);
}

TEST_CASE("count_hits counts rational hits exactly") {
  TargetSeq g0 = gamma_const(Rational(0));
  HitCount all = count_hits(Rational(0), PsiSpec::reciprocal(), g0, 100);
  CHECK(all.exact());
  CHECK(all.lo == 100);

  // alpha = 1/2: even q land on the target, odd q sit at distance 1/2
  HitCount evens =
      count_hits(half(), PsiSpec::constant(make_rational(1, 4)), g0, 101);
  CHECK(evens.exact());
  CHECK(evens.lo == 50);

  // fractional power: cross-powered verdicts against a squared-compare oracle
  PsiSpec ph = PsiSpec::power(Rational(1), half());
  SeededStream ast(20260815, "hits-oracle");
  for (int i = 0; i < 5; ++i) {
    Rational alpha = ast.unit_rational_at(static_cast<std::uint64_t>(i));
    TargetSeq gs = TargetSeq::seeded_uniform(777 + static_cast<std::uint64_t>(i));
    long brute = 0;
    for (long q = 1; q <= 2000; ++q) {
      Rational g = std::get<Rational>(gs.at(q));
      Rational d = circle_dist(Rational(q) * alpha - g);
      Rational lhs = d * d * Rational(q);
      if (lhs < 1) ++brute;
    }
    HitCount hc = count_hits(alpha, ph, gs, 2000);
    CHECK(hc.exact());
    CHECK(hc.lo == brute);
  }

  CHECK_THROWS_AS(count_hits(Rational(0), PsiSpec::reciprocal(), g0, 0),
                  UsageError);
}

TEST_CASE("count_hits handles surd and enclosure inputs") {
  const Quad root2m1(Rational(-1), Rational(1), 2);

  // surd target, rational alpha: verdicts stay exact in Z[sqrt(2)]
  TargetSeq gsurd = TargetSeq::constant(GammaValue(root2m1));
  Rational alpha = make_rational(1, 3);
  long brute = 0;
  for (long q = 1; q <= 500; ++q) {
    Quad ell = root2m1 * Rational(-1) + Rational(Rational(q) * alpha);
    if (quad_hit(ell, make_rational(1, q))) ++brute;
  }
  HitCount hs = count_hits(alpha, PsiSpec::reciprocal(), gsurd, 500);
  CHECK(hs.exact());
  CHECK(hs.lo == brute);

  // enclosure alpha: brackets refine until every q is decided
  TargetSeq g0 = gamma_const(Rational(0));
  RealEnclosure ea = RealEnclosure::from_quad(root2m1);
  HitCount he = count_hits(ea, PsiSpec::reciprocal(), g0, 500);
  CHECK(he.exact());
  CHECK(he.lo == 14);
  long qbrute = 0;
  for (long q = 1; q <= 500; ++q)
    if (quad_hit(root2m1 * Rational(q), make_rational(1, q))) ++qbrute;
  CHECK(qbrute == 14);

  // a target pinned to the knife edge never resolves: full-width bracket
  RealEnclosure::Generator stuck = [](unsigned bits) {
    long b = static_cast<long>(std::min(bits, 200u));
    Rational e = pow2_rat(-b);
    return std::make_pair(Rational(make_rational(1, 4) - e),
                          Rational(make_rational(1, 4) + e));
  };
  TargetSeq gknife = TargetSeq::constant(GammaValue(RealEnclosure(stuck, 32)));
  HitCount hk = count_hits(Rational(0),
                           PsiSpec::constant(make_rational(1, 4)), gknife, 10);
  CHECK(!hk.exact());
  CHECK(hk.lo == 0);
  CHECK(hk.hi == 10);
}

TEST_CASE("count_hits is monotone in Q and psi") {
  SeededStream st(20260815, "hits-mono");
  Rational alpha = st.unit_rational_at(0);
  TargetSeq gs = TargetSeq::seeded_uniform(999);
  HitCount a = count_hits(alpha, PsiSpec::reciprocal(), gs, 100);
  HitCount b = count_hits(alpha, PsiSpec::reciprocal(), gs, 300);
  CHECK(a.exact());
  CHECK(b.exact());
  CHECK(a.lo <= b.lo);
  CHECK(b.lo - a.lo <= 200);

  HitCount narrow =
      count_hits(alpha, PsiSpec::constant(make_rational(1, 8)), gs, 300);
  HitCount wide =
      count_hits(alpha, PsiSpec::constant(make_rational(1, 4)), gs, 300);
  CHECK(narrow.lo <= wide.lo);
}

TEST_CASE("phi_sum brackets expected hit counts") {
  auto flat = phi_sum(PsiSpec::constant(make_rational(1, 4)), 100);
  CHECK(flat.first == 50);
  CHECK(flat.second == 50);

  auto rec = phi_sum(PsiSpec::reciprocal(), 10);
  CHECK(rec.first == make_rational(7381, 1260));
  CHECK(rec.second == rec.first);

  // sum of 2 q^(-1/2) over q <= 10^4 lies between the integral bounds
  PsiSpec ph = PsiSpec::power(Rational(1), half());
  auto s = phi_sum(ph, 10000, 96);
  CHECK(s.first > 396);
  CHECK(s.second < 398);
  CHECK(s.second - s.first < pow2_rat(-40));
  auto shalf = phi_sum(ph, 5000, 96);
  CHECK(shalf.second < s.first);

  CHECK_THROWS_AS(phi_sum(PsiSpec::reciprocal(), 0), UsageError);
}

TEST_CASE("uniformity_check reproduces frozen ratio sweeps") {
  TargetSeq g0 = gamma_const(Rational(0));

  auto full = uniformity_check(CircleIntervalSet::full(), PsiSpec::reciprocal(),
                               g0, 1, 50);
  CHECK(full.q0 == 1);
  CHECK(full.min_ratio == 1);
  for (const auto& row : full.rows) CHECK(row.ratio == 1);

  CircleIntervalSet U = CircleIntervalSet::normalize(
      {{make_rational(3, 10), make_rational(2, 5)}});
  auto rep = uniformity_check(U, PsiSpec::reciprocal(), g0, 1, 5000);
  REQUIRE(rep.rows.size() == 5000);
  CHECK(rep.q0 == 8);
  CHECK(rep.min_ratio == make_rational(3, 14));
  CHECK(rep.rows[6].q == 7);
  CHECK(rep.rows[6].ratio == make_rational(3, 14));   // one sliver of one arc
  CHECK(rep.rows[7].ratio == make_rational(5, 4));    // a full arc inside U
  CHECK(rep.rows[11].ratio == make_rational(5, 6));

  CircleIntervalSet U2 = CircleIntervalSet::normalize(
      {{make_rational(1, 10), make_rational(1, 5)},
       {make_rational(3, 5), make_rational(7, 10)}});
  auto rep2 = uniformity_check(U2, PsiSpec::reciprocal(), g0, 1, 2000);
  CHECK(rep2.q0 == 5);
  CHECK(rep2.min_ratio == make_rational(1, 4));
  CHECK(rep2.rows[3].ratio == make_rational(1, 4));   // worst case sits at q = 4

  // psi above the arc cap: A_q has full measure, the ratio degenerates to 1
  auto wide = uniformity_check(U, PsiSpec::constant(make_rational(3, 4)), g0,
                               1, 10);
  for (const auto& row : wide.rows) {
    CHECK(row.meas_aq == 1);
    CHECK(row.inter == U.measure());
    CHECK(row.ratio == 1);
  }
  CHECK(wide.q0 == 1);
}

TEST_CASE("uniformity_check agrees with set intersections and validates") {
  TargetSeq g0 = gamma_const(Rational(0));
  CircleIntervalSet U = CircleIntervalSet::normalize(
      {{make_rational(3, 10), make_rational(2, 5)}});
  auto rep = uniformity_check(U, PsiSpec::reciprocal(), g0, 2, 300);
  for (long q = 2; q <= 300; ++q) {
    const UniformityRow& row = rep.rows[static_cast<std::size_t>(q - 2)];
    CircleIntervalSet aq = target_set(q, Rational(0), make_rational(1, q));
    CHECK(row.meas_aq == aq.measure());
    CHECK(row.inter == intersect(aq, U).measure());
  }

  CHECK_THROWS_AS(uniformity_check(CircleIntervalSet::empty(),
                                   PsiSpec::reciprocal(), g0, 1, 10),
                  UsageError);
  CHECK_THROWS_AS(uniformity_check(U, PsiSpec::reciprocal(), g0, 2, 1),
                  UsageError);
  CHECK_THROWS_AS(uniformity_check(U, PsiSpec::reciprocal(), g0, 0, 10),
                  UsageError);
  CHECK_THROWS_AS(uniformity_check(U, PsiSpec::log_tempered(), g0, 1, 10),
                  UsageError);
  PsiSpec zero =
      PsiSpec::custom([](long) -> Rational { return Rational(0); }, "zero");
  CHECK_THROWS_AS(uniformity_check(U, zero, g0, 1, 10), UsageError);
  TargetSeq surd =
      TargetSeq::constant(GammaValue(Quad(Rational(-1), Rational(1), 2)));
  CHECK_THROWS_AS(uniformity_check(U, PsiSpec::reciprocal(), surd, 1, 10),
                  UsageError);
}

TEST_CASE("ball_aqprime_overlap measures ball intersections exactly") {
  // full ball: phi(10) arcs of width 2/100
  CHECK(ball_aqprime_overlap(Arc{Rational(0), Rational(1)}, 10,
                             make_rational(1, 10),
                             Rational(0)) == make_rational(2, 25));
  // q = 1 with psi = 1 saturates the circle, so only the ball remains
  CHECK(ball_aqprime_overlap(Arc{make_rational(1, 4), make_rational(3, 4)}, 1,
                             Rational(1), Rational(0)) == half());
  CHECK(ball_aqprime_overlap(Arc{Rational(0), half()}, 5, Rational(0),
                             Rational(0)) == 0);
  // psi above the arc cap with a proper ball: S(2) = {1}, arc (1/8, 7/8)
  CHECK(ball_aqprime_overlap(Arc{Rational(0), half()}, 2, make_rational(3, 4),
                             Rational(0)) == make_rational(3, 8));

  SeededStream st(99, "bhv-dual");
  for (long q = 2; q <= 300; ++q) {
    Rational hi = make_rational(3, 10) +
                  half() * st.unit_rational_at(static_cast<std::uint64_t>(q));
    Arc ball{make_rational(3, 10), hi};
    Rational pq = make_rational(1, q);
    Rational got = ball_aqprime_overlap(ball, q, pq, Rational(0));
    CircleIntervalSet aq = build_Aq_prime(q, pq, Rational(0));
    CircleIntervalSet bs = CircleIntervalSet::normalize({{ball.lo, ball.hi}});
    CHECK(got == intersect(aq, bs).measure());
  }

  CHECK_THROWS_AS(ball_aqprime_overlap(Arc{half(), half()}, 5,
                                       make_rational(1, 5), Rational(0)),
                  UsageError);
  CHECK_THROWS_AS(ball_aqprime_overlap(Arc{make_rational(-1, 10), half()}, 5,
                                       make_rational(1, 5), Rational(0)),
                  UsageError);
  CHECK_THROWS_AS(ball_aqprime_overlap(Arc{half(), make_rational(11, 10)}, 5,
                                       make_rational(1, 5), Rational(0)),
                  UsageError);
  CHECK_THROWS_AS(ball_aqprime_overlap(Arc{Rational(0), Rational(1)}, 0,
                                       make_rational(1, 5), Rational(0)),
                  UsageError);
  CHECK_THROWS_AS(ball_aqprime_overlap(Arc{Rational(0), Rational(1)}, 5,
                                       Rational(-1), Rational(0)),
                  UsageError);
}

TEST_CASE("bhv_local_check certifies local quasi-independence") {
  std::vector<Arc> balls{Arc{Rational(0), Rational(1)},
                         Arc{Rational(0), half()},
                         Arc{make_rational(3, 10), make_rational(31, 100)}};
  auto reports = bhv_local_check(balls, 1, 10000, PsiSpec::reciprocal(),
                                 GammaValue(Rational(0)), make_rational(1, 10));
  REQUIRE(reports.size() == 3);
  // the full circle and a half circle obey the margin everywhere
  CHECK(reports[0].q0 == 1);
  CHECK(reports[0].violations == 0);
  CHECK(sgn(reports[0].worst_excess) < 0);
  CHECK(reports[1].q0 == 1);
  CHECK(reports[1].violations == 0);
  CHECK(sgn(reports[1].worst_excess) < 0);
  // a 1/100 ball needs far more range before the margin stabilizes
  CHECK(reports[2].q0 == 6721);
  CHECK(reports[2].violations == 466);
  CHECK(reports[2].worst_excess > make_rational(8, 1000));
  CHECK(reports[2].worst_excess < make_rational(1, 100));

  TargetSeq g0 = gamma_const(Rational(0));
  CHECK_THROWS_AS(bhv_local_check({}, 1, 10, PsiSpec::reciprocal(),
                                  GammaValue(Rational(0)), Rational(0)),
                  UsageError);
  CHECK_THROWS_AS(bhv_local_check({Arc{half(), half()}}, 1, 10,
                                  PsiSpec::reciprocal(),
                                  GammaValue(Rational(0)), Rational(0)),
                  UsageError);
  CHECK_THROWS_AS(bhv_local_check(balls, 0, 10, PsiSpec::reciprocal(),
                                  GammaValue(Rational(0)), Rational(0)),
                  UsageError);
  CHECK_THROWS_AS(bhv_local_check(balls, 1, 10, PsiSpec::reciprocal(),
                                  GammaValue(Rational(0)), Rational(-1)),
                  UsageError);
  CHECK_THROWS_AS(bhv_local_check(balls, 1, 10, PsiSpec::log_tempered(),
                                  GammaValue(Rational(0)), Rational(0)),
                  UsageError);
  CHECK_THROWS_AS(bhv_local_check(balls, 1, 10, PsiSpec::reciprocal(),
                                  GammaValue(Quad(Rational(-1), Rational(1), 2)),
                                  Rational(0)),
                  UsageError);
}

TEST_CASE("h_admissible reports tail flatness for the iterated-log scale") {
  // ln x <= 1 collapses every clamped factor to 1
  FloatInterval h1 = yu_h(1, 2, Rational(1));
  CHECK(h1.lo_rational() == 1);
  CHECK(h1.hi_rational() == 1);
  FloatInterval h2 = yu_h(2, 4, half());
  CHECK(h2.lo_rational() == 1);
  CHECK(h2.hi_rational() == 1);
  FloatInterval h8 = yu_h(8, 2, Rational(1));  // (ln 8)^2, about 4.32
  CHECK(h8.lo_rational() > 4);
  CHECK(h8.hi_rational() < 5);

  std::function<FloatInterval(long)> h42 = [](long x) -> FloatInterval {
    return yu_h(x, 4, half());
  };
  auto rep = h_admissible(h42, 60, make_rational(1, 64), Rational(2));
  CHECK(rep.flat);
  CHECK(rep.ratio_bounded);
  CHECK(rep.max_tail_increment < make_rational(1, 64));
  CHECK(rep.max_tail_increment > make_rational(1, 100));
  CHECK(rep.max_doubling_ratio > make_rational(3, 2));
  CHECK(rep.max_doubling_ratio < make_rational(8, 5));
  CHECK(rep.partial_sum.lo_rational() > 4);
  CHECK(rep.partial_sum.hi_rational() < make_rational(9, 2));

  // a shorter horizon leaves the tail increments above the same tolerance
  auto rep40 = h_admissible(h42, 40, make_rational(1, 64), Rational(2));
  CHECK(!rep40.flat);
  CHECK(rep40.ratio_bounded);
  CHECK(rep40.max_tail_increment > make_rational(25, 1000));
  CHECK(rep40.max_tail_increment < make_rational(26, 1000));

  CHECK_THROWS_AS(yu_h(0, 2, Rational(1)), UsageError);
  CHECK_THROWS_AS(yu_h(5, 1, Rational(1)), UsageError);
  CHECK_THROWS_AS(yu_h(5, 2, Rational(0)), UsageError);
  CHECK_THROWS_AS(h_admissible(h42, 1, make_rational(1, 64), Rational(2)),
                  UsageError);
  CHECK_THROWS_AS(h_admissible(h42, 63, make_rational(1, 64), Rational(2)),
                  UsageError);
  CHECK_THROWS_AS(h_admissible(h42, 10, Rational(0), Rational(2)), UsageError);
  std::function<FloatInterval(long)> dead = [](long) -> FloatInterval {
    return FloatInterval::from_long(0);
  };
  CHECK_THROWS_AS(h_admissible(dead, 10, make_rational(1, 64), Rational(2)),
                  UsageError);
}
