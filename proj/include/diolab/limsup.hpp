// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "diolab/float_interval.hpp"
#include "diolab/gamma_value.hpp"
#include "diolab/interval_set.hpp"
#include "diolab/rational.hpp"
#include "diolab/scenarios.hpp"

namespace diolab {

// Exact pairwise-overlap table for a finite family of measurable sets on a
// probability space: the per-index measures mu[i] and the full double sums
// sum_{q,r <= Q'} mu(A_q cap A_r), snapshotted on a doubling grid of Q'. The
// diagonal terms equal mu[q], so every snapshot dominates the plain measure
// sum, and snapshots are monotone in Q'. Indices are positional (1-based);
// from_circle ties index q to the scale q of A_q.
class OverlapMatrix {
 public:
  // Abstract table: mu[i] in [0, 1], pair_fn(q, r) for r < q must satisfy
  // 0 <= pair_fn(q, r) <= min(mu[q], mu[r]). The diagonal is never queried.
  static OverlapMatrix from_tables(
      std::vector<Rational> mu,
      const std::function<Rational(long, long)>& pair_fn);
  // mu and intersections taken from explicit arc sets.
  static OverlapMatrix from_sets(const std::vector<CircleIntervalSet>& sets);
  // A_q = {alpha : ||q alpha - gamma_q|| < psi(q)} for q = 1..Q. Exact psi
  // kinds and rational targets only; Q capped at 4096. Scales with
  // psi(q) >= 1/2 have full measure, so their intersections collapse to the
  // partner's measure; remaining pairs go through pair_measure. Row sums are
  // computed in parallel blocks and merged in index order, so results are
  // identical for every thread count.
  static OverlapMatrix from_circle(long Q, const PsiSpec& psi,
                                   const TargetSeq& gamma,
                                   unsigned threads = 1);

  long Q() const { return static_cast<long>(mu_.size()); }
  const std::vector<Rational>& mu() const { return mu_; }
  // Doubling grid {1, 2, 4, ...} capped by and always ending at Q.
  const std::vector<long>& grid() const { return grid_; }
  // sum_{q <= Qprime} mu[q], any 1 <= Qprime <= Q.
  Rational mu_sum(long Qprime) const;
  // sum_{q,r <= Qprime} mu(A_q cap A_r); Qprime must be a grid point.
  Rational pair_sum(long Qprime) const;

 private:
  OverlapMatrix() = default;
  void build(std::vector<Rational> mu,
             const std::function<Rational(long, long)>& pair_fn,
             bool validate, unsigned threads);

  std::vector<Rational> mu_;         // mu_[q-1] = mu(A_q)
  std::vector<Rational> mu_prefix_;  // mu_prefix_[q-1] = mu_sum(q)
  std::vector<long> grid_;
  std::vector<Rational> psums_;  // psums_[i] = pair_sum(grid_[i])
};

// (sum mu)^2 / (sum pairs) at the given grid point: a certified lower bound
// for the measure of the union over q <= Qprime, and the finite-stage value
// whose limsup lower-bounds the measure of limsup A_q. Requires a positive
// measure sum.
Rational bc_lower_bound(const OverlapMatrix& m, long Qprime);

// The same ratio over the whole index set of m, as a union lower bound.
// Rejects an empty index set and a zero measure sum.
Rational chung_erdos_bound(const OverlapMatrix& m);

// Dyadic classes D_ell = {q : 2^ell <= eta(q) < 2^(ell+1)} with the weighted
// series restricted to each class. Every q lands in exactly one class
// (ell = floor(log2 eta(q))); sigma_ell sums the weights over D_ell.
struct YuDecomposition {
  std::map<long, std::vector<long>> classes;
  std::map<long, Rational> sigma_ell;
};

// eta values must be >= 1 and weights >= 0, one of each per q.
YuDecomposition yu_classes(const std::vector<long>& qs,
                           const std::vector<Rational>& eta,
                           const std::vector<Rational>& weights);

// Default circle instantiation: qs = 1..Q with eta(q) the gcd-sum
// sum_{d|q} phi(d)/d from arith_stats.
YuDecomposition yu_classes_default(long Q, const std::vector<Rational>& weights);

// w(q) = 1 / (sqrt(log q) * prod_{j=2}^{k-1} log^(j) q * (log^(k) q)^(1+eps))
// with log = max(1, ln) at every level, rounded outward. q <= 2 makes every
// factor clamp to 1, so w = 1 exactly. Requires q >= 1, k >= 2, eps > 0.
FloatInterval extra_div_weight(long q, int k, const Rational& eps,
                               mpfr_prec_t prec = 128);

// Partial sums s_K = sum_{k=0..K} 2^k * term(2^k) for a nonincreasing term.
// Monotonicity is checked on the sampled points 2^0..2^K and rejected on
// failure; K is capped at 62 so the arguments stay in long range. The
// returned trajectory (s_0, ..., s_K) is the caller's divergence heuristic:
// unbounded growth on the tested range, never a verdict.
std::vector<Rational> condensation_partial(
    const std::function<Rational(long)>& term, int K);

// Hit count with certified bounds: lo <= N <= hi, equal unless a comparison
// stayed ambiguous at the precision cap.
struct HitCount {
  long lo = 0;
  long hi = 0;
  bool exact() const { return lo == hi; }
};

// N(Q, alpha) = #{1 <= q <= Q : ||q alpha - gamma_q|| < psi(q)}, strict, so
// a knife-edge ||q alpha - gamma_q|| = psi(q) is a miss. Rational alpha with
// rational or surd targets and exact or power psi kinds compare exactly (a
// fractional exponent s = n/d is settled by raising both sides to the d-th
// power); everything else brackets and refines, and a comparison still
// straddling at the cap widens [lo, hi] by one.
HitCount count_hits(const Rational& alpha, const PsiSpec& psi,
                    const TargetSeq& gamma, long Q);
HitCount count_hits(const RealEnclosure& alpha, const PsiSpec& psi,
                    const TargetSeq& gamma, long Q);

// Phi(Q) = sum_{q <= Q} 2 psi(q), outward bounds; exact kinds collapse to a
// point.
std::pair<Rational, Rational> phi_sum(const PsiSpec& psi, long Q,
                                      mpfr_prec_t prec = 128);

struct UniformityRow {
  long q = 0;
  Rational meas_aq;  // min(1, 2 psi(q))
  Rational inter;    // meas(A_q cap U)
  Rational ratio;    // inter / (meas_aq * meas(U))
};

struct UniformityReport {
  // Smallest q in range with ratio >= 1/2 at every tested q' >= q; 0 when
  // even the last row fails.
  long q0 = 0;
  Rational min_ratio;
  std::vector<UniformityRow> rows;
};

// Exact sweep of meas(A_q cap U) / (meas(A_q) meas(U)) for q in
// [q_lo, q_hi]. U must have positive measure, psi must be positive on the
// range, targets must be rational. Intersections use the cumulative measure
// of the periodic family {||s|| < psi} over each arc of U, O(#arcs) per q.
UniformityReport uniformity_check(const CircleIntervalSet& U,
                                  const PsiSpec& psi, const TargetSeq& gamma,
                                  long q_lo, long q_hi);

// meas(B cap A'_q) for one ball, exact; A'_q is the union over a in S(q) of
// the arcs ((a + gamma - psi_q)/q, (a + gamma + psi_q)/q).
Rational ball_aqprime_overlap(const Arc& ball, long q, const Rational& psi_q,
                              const Rational& gamma);

struct BhvBallReport {
  Arc ball;
  // Smallest q in range from which meas(B cap A'_q) <= (1+delta) meas(B)
  // meas(A'_q) holds at every tested q onward; 0 when the last q fails.
  long q0 = 0;
  long violations = 0;
  // max over q of lhs - rhs; <= 0 exactly when the bound holds everywhere.
  Rational worst_excess;
};

// Quasi-independence sweep of each ball against the restricted sets A'_q.
// Balls need positive measure, delta >= 0, psi exact, gamma rational (the
// residue sets S(q) are defined through the rational reduction of gamma).
std::vector<BhvBallReport> bhv_local_check(const std::vector<Arc>& balls,
                                           long q_lo, long q_hi,
                                           const PsiSpec& psi,
                                           const GammaValue& gamma,
                                           const Rational& delta);

// h(x) = f(max(1, log x)) with f(y) = y * prod_{j=1}^{k-3} log^(j) y *
// (log^(k-2) y)^(1+eps), the iterated-log weight family; k = 2 degenerates
// to f(y) = y^(1+eps). Outward bounds.
FloatInterval yu_h(long x, int k, const Rational& eps, mpfr_prec_t prec = 128);

struct HAdmissReport {
  FloatInterval partial_sum;    // sum_{ell=1..L} 1/h(2^ell)
  Rational max_tail_increment;  // upper bound over the tail half
  Rational max_doubling_ratio;  // upper bound on h(2q)/h(q) over the grid
  bool flat = false;            // every tail increment below tol
  bool ratio_bounded = false;   // every doubling ratio below ratio_cap
};

// Admissibility evidence for a weight h: the series sum 1/h(2^ell) must look
// Cauchy-flat (tail increments below tol for ell > L/2) and h must grow
// slowly (h(2q)/h(q) <= ratio_cap at q = 2^j, j < L). h must be positive
// wherever sampled. Evidence on a finite range, not a convergence proof.
HAdmissReport h_admissible(const std::function<FloatInterval(long)>& h, int L,
                           const Rational& tol, const Rational& ratio_cap);

}  // namespace diolab
