// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "diolab/float_interval.hpp"
#include "diolab/gamma_value.hpp"
#include "diolab/rational.hpp"
#include "diolab/scenarios.hpp"

namespace diolab {

// Exact intersection length of two circle arcs (c1 - u, c1 + u) and
// (c2 - v, c2 + v) given the circle distance D = ||c1 - c2||. Requires
// 0 <= u, v <= 1/2 and 0 <= D <= 1/2. The second component accounts for the
// arcs meeting again around the far side; it vanishes unless u + v > 1 - D.
Rational arc_overlap(const Rational& u, const Rational& v, const Rational& D);

// One row of a pairwise sweep. Invariants: meas_qr <= delta_min * n_count
// and verdict == (meas_qr <= bound_val).
struct PairStats {
  long q = 0;
  long r = 0;
  Rational meas_qr;
  Rational delta_min;   // min{2 psi(q)/q, 2 psi(r)/r}
  Rational Delta_max;   // max{2 psi(q)/q, 2 psi(r)/r}
  long n_count = 0;     // N(q, r) at Delta_max
  Rational bound_val;   // 2 (2 psi(q))(2 psi(r)) + (gcd/q) 2 psi(q)
  bool verdict = false;
};

// Exact measure of A_q int A_r where A_q is the union over a in [0, q) of
// arcs of radius psi(q)/q centered at (a + gamma(q))/q. Enumerates only the
// residue classes of r a - q b mod q r whose class distance is below the
// overlap threshold, never the q * r product. Requires 1 <= r < q, exact
// psi with psi(q), psi(r) <= 1/2, and rational targets; surd or bracket
// targets only admit certified bounds (pair_measure_bounds).
Rational pair_measure(long q, long r, const PsiSpec& psi,
                      const TargetSeq& gamma);

// Same measure through full interval-set intersection. Slower; kept as an
// independent route that must agree with pair_measure exactly.
Rational pair_measure_oracle(long q, long r, const PsiSpec& psi,
                             const TargetSeq& gamma);

// Certified bracket of the pair measure for any target kind: outer arcs
// give the upper leg, inner arcs the lower. Rational targets collapse to a
// point bracket.
std::pair<Rational, Rational> pair_measure_bounds(long q, long r,
                                                  const PsiSpec& psi,
                                                  const TargetSeq& gamma,
                                                  unsigned prec_bits = 128);

// Full pairwise check row: exact measure, the min/max arc-length scales,
// N(q, r) at Delta_max, and the unconditional bound
// 2 (2 psi(q))(2 psi(r)) + (gcd(q,r)/q)(2 psi(q)). verdict must come out
// true on every input; a false verdict is an implementation bug.
PairStats overlap_bound_check(long q, long r, const PsiSpec& psi,
                              const TargetSeq& gamma);

// N(q, r): exact number of pairs (a, b) in [1, q] x [1, r] with
// |r (a + gamma_q) - q (b + gamma_r)| < Delta q r. Enumerated per value of
// r a - q b (a multiple of gcd(q, r)) inside the window, an O(1) progression
// count each; satisfies N <= (2 Delta q r / gcd + 1) gcd. Requires Delta > 0.
long count_N(long q, long r, const Rational& Delta, const Rational& gamma_q,
             const Rational& gamma_r);

// M(q, r): exact number of pairs (a, b) in S(q) x S(r) with
// |r (a + gamma) - q (b + gamma)| < 2 r psi(q), enumerated via residue
// classes of r a - q b rather than the full product. Requires r < q.
long count_M(long q, long r, const PsiSpec& psi, const GammaValue& gamma);

// N_delta(q, r): exact number of pairs with a in S(q), b in {0..r-1} and
// |r (a + gamma) - q (b + gamma)| < gcd(q, r)^delta_exp. The power threshold
// is compared by cross-powering, |L| < g^(p/s) iff |L|^s < g^p, so verdicts
// stay exact for rational and surd targets; brackets refine on demand.
// Requires 0 < delta_exp <= 1/4.
long count_Ndelta(long q, long r, const Rational& delta_exp,
                  const GammaValue& gamma);

// Per-divisor tally: for d | q, the exact sum of count_Ndelta(q, r) over
// r < q with gcd(q, r) = d, against the reference q d^(-1/4) + d.
struct LemNRow {
  long d = 0;
  long sum = 0;
  FloatInterval reference;  // q d^(-1/4) + d, outward
  FloatInterval ratio;      // sum / reference
};

struct LemNReport {
  long q = 0;
  Rational delta_exp;
  std::vector<LemNRow> rows;   // one per divisor of q, ascending
  std::size_t max_row = 0;     // index of the largest ratio (upper endpoint)

  const LemNRow& max_ratio_row() const { return rows[max_row]; }
};

// Runs the divisor tally for every d | q (the d = q row has an empty range
// and sum 0). Uses a scaled-integer bracket to decide almost every
// comparison and falls back to the exact cross-powered compare on the rare
// undecided candidate, so counts match count_Ndelta exactly. Requires
// q >= 2 and 0 < delta_exp <= 1/4.
LemNReport lemN_verify(long q, const Rational& delta_exp,
                       const GammaValue& gamma);

// One point of the pair-sum ratio grid. num is the full double sum of
// meas(A'_q int A'_r) over q, r <= Q (diagonal included); psi_sum is the
// exact partial sum of psi. exact means num_lo == num_hi.
struct QiaPoint {
  long Q = 0;
  Rational psi_sum;
  Rational num_lo;
  Rational num_hi;
  bool exact = false;
  Rational rho_lo;  // num_lo / psi_sum^2
  Rational rho_hi;
};

enum class QiaMode {
  kAuto,          // exact pairs when eligible, scaled bounds otherwise
  kExactPairs,    // exact rational sweep; rational target, Q <= 4096
  kScaledBounds,  // 128-bit scaled sweep; psi = 1/q, any target kind
};

// Single sweep over all pairs r <= q <= q_max, snapshotting the running
// sums at every power of two and at q_max. Hypotheses checked up front:
// psi exact, decreasing, and psi(q) <= 1/q for all q <= q_max. The scaled
// mode brackets irrational targets at fixed precision and accumulates
// outward 2^-96 fixed-point legs, so num_hi - num_lo stays below
// pairs * 2^-95; the exact mode returns point values. Deterministic for
// any thread count: pair blocks are fixed and merged in q order.
std::vector<QiaPoint> qia_grid(long q_max, const PsiSpec& psi,
                               const GammaValue& gamma,
                               QiaMode mode = QiaMode::kAuto,
                               unsigned threads = 1);

// The last grid point only: rho(Q) with its certified bracket.
QiaPoint qia_ratio(long Q, const PsiSpec& psi, const GammaValue& gamma,
                   QiaMode mode = QiaMode::kAuto, unsigned threads = 1);

}  // namespace diolab
