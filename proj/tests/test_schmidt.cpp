// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <utility>
#include <vector>

#include "diolab/arith_stats.hpp"
#include "diolab/continued_fraction.hpp"
#include "diolab/errors.hpp"
#include "diolab/rng.hpp"
#include "diolab/schmidt.hpp"

using namespace diolab;

namespace {

using Conv = std::vector<std::pair<Integer, Integer>>;

// Structural oracle for a convergent list of a rational target: lowest
// terms, nondecreasing denominators, consecutive determinants +-1, and the
// approximation error alternating in sign and shrinking.
void check_convergent_structure(const Conv& conv, const Rational& gamma,
                                const Integer& bound) {
  REQUIRE(!conv.empty());
  Integer g;
  for (std::size_t i = 0; i < conv.size(); ++i) {
    const auto& [a, b] = conv[i];
    REQUIRE(b >= 1);
    REQUIRE(b <= bound);
    mpz_gcd(g.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    REQUIRE(g == 1);
    if (i > 0) {
      REQUIRE(conv[i - 1].second <= b);
      Integer det = a * conv[i - 1].second - conv[i - 1].first * b;
      REQUIRE(abs(det) == 1);
    }
  }
  int last_sign = 2;
  for (std::size_t i = 0; i < conv.size(); ++i) {
    Rational err = gamma - Rational(conv[i].first) / Rational(conv[i].second);
    int s = sgn(err);
    if (s == 0) {
      REQUIRE(i + 1 == conv.size());  // exact hit only at the end
    } else if (last_sign != 2) {
      REQUIRE(s == -last_sign);
    }
    last_sign = s;
  }
}

}  // namespace

TEST_CASE("convergents of rational targets") {
  Conv conv = cf_convergents(GammaValue(Rational(2, 7)), Integer(1000));
  REQUIRE(conv.size() == 3);
  CHECK(conv[0] == std::pair<Integer, Integer>{0, 1});
  CHECK(conv[1] == std::pair<Integer, Integer>{1, 3});
  CHECK(conv[2] == std::pair<Integer, Integer>{2, 7});

  Conv zero = cf_convergents(GammaValue(Rational(0)), Integer(5));
  REQUIRE(zero.size() == 1);
  CHECK(zero[0] == std::pair<Integer, Integer>{0, 1});

  CHECK_THROWS_AS(cf_convergents(GammaValue(Rational(1, 2)), Integer(0)),
                  UsageError);

  SeededStream qs(20260815, "cf-rational");
  for (int trial = 0; trial < 200; ++trial) {
    std::uint64_t at = static_cast<std::uint64_t>(trial);
    Rational gamma = qs.unit_rational_at(at) * 4 - Rational(3, 2);
    Integer bound(1 + static_cast<long>(qs.index_at(at + 1000, 5000)));
    check_convergent_structure(cf_convergents(GammaValue(gamma), bound),
                               gamma, bound);
  }
}

TEST_CASE("convergents of quadratic surds") {
  Quad root2m1(Rational(-1), Rational(1), 2);  // sqrt(2) - 1 = [0;2,2,2,...]
  Conv conv = cf_convergents(GammaValue(root2m1), Integer(1000));
  Conv expect{{0, 1},    {1, 2},    {2, 5},     {5, 12},   {12, 29},
              {29, 70},  {70, 169}, {169, 408}, {408, 985}};
  REQUIRE(conv == expect);

  // Surd with b = 0 degrades to the exact rational path.
  Quad asrational(Rational(2, 7));
  CHECK(cf_convergents(GammaValue(asrational), Integer(10)).size() == 3);
}

TEST_CASE("convergents from refinable brackets") {
  Quad root3m1(Rational(-1), Rational(1), 3);
  GammaValue exact(root3m1);
  GammaValue bracket(RealEnclosure::from_quad(root3m1));
  CHECK(cf_convergents(exact, Integer(1000000)) ==
        cf_convergents(bracket, Integer(1000000)));

  GammaValue wrapped(RealEnclosure(Rational(2, 7)));
  CHECK(cf_convergents(wrapped, Integer(1000)) ==
        cf_convergents(GammaValue(Rational(2, 7)), Integer(1000)));

  // A bracket that never shrinks cannot separate the second quotient.
  RealEnclosure stubborn(
      [](unsigned) {
        return std::pair<Rational, Rational>{Rational(3, 10), Rational(2, 5)};
      },
      32);
  try {
    cf_convergents(GammaValue(stubborn), Integer(100));
    FAIL("expected PrecisionError");
  } catch (const PrecisionError& e) {
    CHECK(std::string(e.what()).find("insufficient precision") !=
          std::string::npos);
  }
}

TEST_CASE("dirichlet reduction endpoints") {
  SchmidtApprox r1 = dirichlet_reduce(GammaValue(Rational(2, 7)), 100);
  CHECK(r1.A == 2);
  CHECK(r1.B == 7);
  CHECK(r1.err_bound == 0);

  Quad root2m1(Rational(-1), Rational(1), 2);
  SchmidtApprox r2 = dirichlet_reduce(GammaValue(root2m1), 100);
  CHECK(r2.A == 2);
  CHECK(r2.B == 5);
  CHECK(r2.err_bound > 0);
  CHECK(r2.err_bound < Rational(1, 50));

  SchmidtApprox r3 = dirichlet_reduce(GammaValue(Rational(0)), 17);
  CHECK(r3.A == 0);
  CHECK(r3.B == 1);
  CHECK(r3.err_bound == 0);

  // Two denominator-1 convergents; the later (closer) one wins.
  SchmidtApprox r4 = dirichlet_reduce(GammaValue(Rational(3, 5)), 3);
  CHECK(r4.A == 1);
  CHECK(r4.B == 1);
  CHECK(r4.err_bound == Rational(2, 5));

  CHECK_THROWS_AS(dirichlet_reduce(GammaValue(Rational(1, 2)), 0), UsageError);

  RealEnclosure stubborn(
      [](unsigned) {
        return std::pair<Rational, Rational>{Rational(3, 10), Rational(2, 5)};
      },
      32);
  CHECK_THROWS_AS(dirichlet_reduce(GammaValue(stubborn), 100), PrecisionError);
}

TEST_CASE("dirichlet reduction recovers rational targets once q >= B^2") {
  SeededStream rs(20260815, "dirichlet-recovery");
  for (int trial = 0; trial < 120; ++trial) {
    std::uint64_t at = static_cast<std::uint64_t>(trial);
    long b = static_cast<long>(rs.index_at(at, 40));
    long a = static_cast<long>(rs.index_at(at + 500, 120)) - 60;
    Rational gamma = make_rational(Integer(a), Integer(b));
    long bred = static_cast<long>(gamma.get_den().get_si());
    for (long q : {bred * bred, bred * bred + 5, 4 * bred * bred}) {
      SchmidtApprox red = dirichlet_reduce(GammaValue(gamma), q);
      REQUIRE(red.A == gamma.get_num());
      REQUIRE(red.B == gamma.get_den());
      REQUIRE(red.err_bound == 0);
    }
  }

  SchmidtApprox neg = dirichlet_reduce(GammaValue(Rational(-2, 7)), 100);
  CHECK(neg.A == -2);
  CHECK(neg.B == 7);
}

TEST_CASE("dirichlet certificates hold exactly") {
  std::vector<GammaValue> targets;
  targets.emplace_back(Quad(Rational(-1), Rational(1), 2));
  targets.emplace_back(Quad(Rational(-1), Rational(1), 3));
  targets.emplace_back(Quad(Rational(-1, 2), Rational(1, 2), 5));
  SeededStream gs(20260815, "dirichlet-cert");
  for (int i = 0; i < 40; ++i) {
    targets.emplace_back(Rational(gs.unit_rational_at(i) * 3 - 1));
  }
  for (const GammaValue& gamma : targets) {
    for (long q : {1L, 2L, 3L, 7L, 10L, 50L, 97L, 1000L, 12345L}) {
      SchmidtApprox red = dirichlet_reduce(gamma, q);
      Integer g;
      mpz_gcd(g.get_mpz_t(), red.A.get_mpz_t(), red.B.get_mpz_t());
      REQUIRE(g == 1);
      REQUIRE(red.B >= 1);
      REQUIRE(red.B <= isqrt(Integer(q)));
      Integer b2 = red.B * red.B;
      REQUIRE(red.err_bound * red.err_bound * Rational(b2) * Rational(q) < 1);
      if (const auto* r = std::get_if<Rational>(&gamma)) {
        REQUIRE(abs(*r - Rational(red.A) / Rational(red.B)) == red.err_bound);
      }
      if (const auto* s = std::get_if<Quad>(&gamma)) {
        Quad delta = *s - Rational(red.A) / Rational(red.B);
        REQUIRE(delta.abs().cmp(red.err_bound) <= 0);
      }
    }
  }
}

TEST_CASE("residue sets") {
  SchmidtApprox handbuilt;
  handbuilt.q = 5;
  handbuilt.A = 1;
  handbuilt.B = 3;
  SqSet s5 = build_Sq(5, handbuilt);
  CHECK(s5.members == std::vector<long>{0, 1, 2, 4});

  SchmidtApprox hom;
  hom.q = 12;
  hom.A = 0;
  hom.B = 1;
  SqSet s12 = build_Sq(12, hom);
  CHECK(s12.members == std::vector<long>{1, 5, 7, 11});
  CHECK(s12.members.size() == totient_u64(12));

  SqSet s9 = build_Sq(9, dirichlet_reduce(GammaValue(Rational(1, 3)), 9));
  CHECK(s9.members.size() == 9);  // 3a+1 is never divisible by 3

  SchmidtApprox wrongq;
  wrongq.q = 7;
  CHECK_THROWS_AS(build_Sq(8, wrongq), UsageError);
  SchmidtApprox sharing;
  sharing.q = 10;
  sharing.A = 2;
  sharing.B = 2;
  CHECK_THROWS_AS(build_Sq(10, sharing), UsageError);

  SeededStream ss(20260815, "sq-scan");
  for (int trial = 0; trial < 150; ++trial) {
    std::uint64_t at = static_cast<std::uint64_t>(trial);
    long q = static_cast<long>(ss.index_at(at, 400));
    Rational gamma = ss.unit_rational_at(at + 900);
    SchmidtApprox red = dirichlet_reduce(GammaValue(gamma), q);
    SqSet s = build_Sq(q, red);
    REQUIRE(s.members.size() >= totient_u64(static_cast<std::uint64_t>(q)));
    long prev = -1;
    for (long a : s.members) {
      REQUIRE(a > prev);
      REQUIRE(a < q);
      prev = a;
    }
    // Independent membership recheck over every residue.
    std::size_t idx = 0;
    for (long a = 0; a < q; ++a) {
      Integer v = Integer(a) * red.B + red.A, g;
      mpz_gcd(g.get_mpz_t(), v.get_mpz_t(), Integer(q).get_mpz_t());
      bool in = (idx < s.members.size() && s.members[idx] == a);
      REQUIRE(in == (g == 1));
      if (in) ++idx;
    }
    REQUIRE(idx == s.members.size());
  }
}

TEST_CASE("restricted arc unions for exact rational targets") {
  CircleIntervalSet hom = build_Aq_prime(12, Rational(1, 10), Rational(0));
  CHECK(hom.measure() == Rational(1, 15));
  CHECK(hom.segments().size() == 4);

  CircleIntervalSet third = build_Aq_prime(5, Rational(1, 10), Rational(1, 3));
  CHECK(third.measure() == Rational(4, 25));
  CHECK(third.segments().size() == 4);
  CircleIntervalSet full5 = target_set(5, Rational(1, 3), Rational(1, 10));
  CHECK(intersect(third, full5).measure() == third.measure());
  CHECK(unite(third, full5).measure() == full5.measure());

  // #S(9) = 9, so the restricted and unrestricted sets coincide.
  CircleIntervalSet all9 = build_Aq_prime(9, Rational(1, 8), Rational(1, 3));
  CHECK(all9.measure() == Rational(1, 4));
  CHECK(all9.measure() == target_set(9, Rational(1, 3), Rational(1, 8)).measure());

  CHECK(build_Aq_prime(7, Rational(0), Rational(1, 3)).is_empty());
  CHECK_THROWS_AS(build_Aq_prime(7, Rational(2, 3), Rational(0)), UsageError);
  CHECK_THROWS_AS(build_Aq_prime(0, Rational(1, 10), Rational(0)), UsageError);

  SeededStream as(20260815, "aprime");
  for (int trial = 0; trial < 80; ++trial) {
    std::uint64_t at = static_cast<std::uint64_t>(trial);
    long q = static_cast<long>(as.index_at(at, 60));
    Rational gamma = as.unit_rational_at(at + 300);
    Rational psi = as.unit_rational_at(at + 600) / 2;
    SqSet s = build_Sq(q, dirichlet_reduce(GammaValue(gamma), q));
    CircleIntervalSet restricted = build_Aq_prime(q, psi, gamma);
    Rational expected = Rational(2) * psi *
                        Rational(static_cast<long>(s.members.size())) /
                        Rational(q);
    REQUIRE(restricted.measure() == expected);
    CircleIntervalSet whole = target_set(q, gamma, psi);
    REQUIRE(restricted.measure() <= whole.measure());
    REQUIRE(intersect(restricted, whole).measure() == restricted.measure());
  }
}

TEST_CASE("restricted arc unions for surd and bracket targets") {
  Quad root2m1(Rational(-1), Rational(1), 2);
  TargetSetResult outer =
      build_Aq_prime_outer(7, Rational(1, 10), GammaValue(root2m1), 100);
  Rational ideal(6, 35);  // #S(7) = 6 arcs of length 2*(1/10)/7
  CHECK(outer.measure_error <= pow2_rat(-100));
  CHECK(outer.set.measure() >= ideal);
  CHECK(outer.set.measure() - ideal <= outer.measure_error);

  // Tighter precision nests inside coarser precision.
  TargetSetResult coarse =
      build_Aq_prime_outer(7, Rational(1, 10), GammaValue(root2m1), 40);
  CHECK(intersect(outer.set, coarse.set).measure() == outer.set.measure());

  // Same generator through the bracket variant gives the same outer set.
  TargetSetResult viabracket = build_Aq_prime_outer(
      7, Rational(1, 10), GammaValue(RealEnclosure::from_quad(root2m1)), 100);
  CHECK(viabracket.set.measure() == outer.set.measure());
  CHECK(viabracket.set.segments().size() == outer.set.segments().size());

  // Rational dispatch stays exact.
  TargetSetResult exact =
      build_Aq_prime_outer(5, Rational(1, 10), GammaValue(Rational(1, 3)), 64);
  CHECK(exact.measure_error == 0);
  CHECK(exact.set.measure() == Rational(4, 25));
}

TEST_CASE("star discrepancy") {
  std::vector<Rational> quarters{Rational(0), Rational(1, 4), Rational(1, 2),
                                 Rational(3, 4)};
  CHECK(star_discrepancy(quarters) == Rational(1, 4));
  CHECK(star_discrepancy({Rational(0)}) == Rational(1));

  const long n = 10;
  std::vector<Rational> shifted, grid;
  for (long i = 1; i <= n; ++i) {
    shifted.push_back(make_rational(Integer(2 * i - 1), Integer(2 * n)));
    grid.push_back(make_rational(Integer(i - 1), Integer(n)));
  }
  CHECK(star_discrepancy(shifted) == Rational(1, 20));
  CHECK(star_discrepancy(grid) == Rational(1, 10));

  CHECK_THROWS_AS(star_discrepancy({}), UsageError);
  CHECK_THROWS_AS(star_discrepancy({Rational(1, 2), Rational(1, 4)}),
                  UsageError);
  CHECK_THROWS_AS(star_discrepancy({Rational(1)}), UsageError);
  CHECK_THROWS_AS(star_discrepancy({Rational(-1, 4)}), UsageError);
}

TEST_CASE("residue sets equidistribute along primes") {
  Quad root2m1(Rational(-1), Rational(1), 2);
  Rational prev(1);
  for (long q : {101L, 1009L, 5003L}) {
    SqSet s = build_Sq(q, dirichlet_reduce(GammaValue(root2m1), q));
    std::vector<Rational> pts;
    pts.reserve(s.members.size());
    for (long a : s.members) {
      pts.push_back(make_rational(Integer(a), Integer(q)));
    }
    Rational d = star_discrepancy(pts);
    CHECK(d < prev);
    CHECK(d <= Rational(3) / Rational(q));
    prev = d;
  }
}
