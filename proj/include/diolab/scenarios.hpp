// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "diolab/float_interval.hpp"
#include "diolab/gamma_value.hpp"
#include "diolab/rational.hpp"
#include "diolab/rng.hpp"
#include "diolab/sieve.hpp"

namespace diolab {

// Doubly exponential blocks: block k is [2^(2^k), 2^(2^(k+1))) for k >= 0.
// Every q >= 2 lies in exactly one block; q = 1 lies below all of them.
int dexp_block_index(long q);

// Membership in the union of even-index blocks. q = 1 reports false: it is
// assigned to the complement class by convention.
bool in_even_blocks(long q);

// An approximation function q -> psi(q) >= 0. Kinds:
//   power          c / q^s with c >= 0, s >= 0 (exact when s is an integer)
//   log-tempered   1 / (q log q) with log x = max(1, ln x)
//   table          explicit values for q = 1..N
//   counterexample the divergence/convergence pair: flat 2^(-2^(k+1)) on the
//                  blocks of one parity, q^(-2) everywhere else
//   custom         caller-supplied exact closure
// The clamp flag replaces psi(q) by min(psi(q), 1/q) on evaluation.
class PsiSpec {
 public:
  enum class Kind { kPower, kLogTempered, kTable, kCounterexample, kCustom };

  static PsiSpec power(const Rational& c, const Rational& s);
  static PsiSpec reciprocal() { return power(1, 1); }
  static PsiSpec constant(const Rational& c) { return power(c, 0); }
  static PsiSpec log_tempered();
  // require_decreasing demands psi(q) >= psi(q+1) over the whole table.
  static PsiSpec table(std::vector<Rational> values, bool require_decreasing);
  // which = 0: flat on even-index blocks; which = 1: flat on odd-index
  // blocks. Both are decreasing; the flat parts make one sum diverge while
  // the q^(-2) part keeps the other convergent.
  static PsiSpec counterexample(int which);
  static PsiSpec custom(std::function<Rational(long)> fn, std::string label);

  // Copy of this spec with min(psi, 1/q) applied on evaluation.
  PsiSpec clamped() const;

  Kind kind() const { return kind_; }
  bool clamp() const { return clamp_; }
  const std::string& label() const { return label_; }
  // True when eval(q) is exactly 1/q for every q (clamping is a no-op then).
  bool is_reciprocal() const {
    return kind_ == Kind::kPower && c_ == 1 && s_ == 1;
  }
  // Power parameters c, s of psi(q) = c * q^(-s). Meaningful only when
  // kind() == kPower; callers cross-power against these for exact verdicts.
  const Rational& power_coeff() const { return c_; }
  const Rational& power_exp() const { return s_; }

  // True when eval() can return the exact value for every q. Fractional
  // powers and the log-tempered kind only bracket; use eval_bounds.
  bool exact() const;
  Rational eval(long q) const;
  // Outward bounds at the given precision; exact kinds return a point.
  std::pair<Rational, Rational> eval_bounds(long q, mpfr_prec_t prec = 128) const;
  // Exact verdict on psi(q) >= psi(q+1) for every qlo <= q < qhi. Power
  // kinds compare by cross-powering, so fractional exponents stay exact.
  bool check_decreasing(long qlo, long qhi) const;

 private:
  PsiSpec() = default;

  Kind kind_ = Kind::kPower;
  bool clamp_ = false;
  int which_ = 0;
  Rational c_, s_;
  std::vector<Rational> table_;
  std::function<Rational(long)> fn_;
  std::string label_;
};

// Grammar: "recip" | "pow:S" | "const:R" | "logq" | "cex0" | "cex1" |
// "table:PATH". Table files hold whitespace-separated rationals, value i
// belonging to q = i (1-based); '#' starts a comment. Tables loaded here
// must be decreasing.
PsiSpec make_psi(const std::string& spec);

// Per-block sums of the counterexample(0) function. On an even-index block
// the value is flat and the contribution to the even class has the closed
// form 1 - 2^(-2^k). On an odd-index block the value is q^(-2); small blocks
// are enumerated exactly, blocks too large to enumerate get the telescoping
// upper bound 1/(lo-1) - 1/(hi-1). The point q = 1 belongs to no block and
// contributes psi(1) = 1 to the complement class; callers add it themselves.
struct BlockSum {
  int k = 0;
  Integer lo, hi;  // the block is [lo, hi)
  bool even = false;
  Rational even_part;           // contribution to the even-index class
  Rational odd_part;            // contribution to the complement class
  bool odd_part_exact = false;  // enumerated, not just bounded
};

std::vector<BlockSum> block_sums(int k_max);

// A deterministic target sequence q -> gamma_q.
class TargetSeq {
 public:
  enum class Kind { kConstant, kFiniteSet, kConvergent, kRandom };

  static TargetSeq constant(GammaValue value);
  // gamma_q = sigmas[assign(q)]; every value is one of the declared sigmas.
  static TargetSeq finite_set(std::vector<GammaValue> sigmas,
                              std::function<std::size_t(long)> assign);
  // gamma_q = limit + scale / q^power with power >= 2, so the deviations
  // from the limit are summable.
  static TargetSeq convergent(const Rational& limit, const Rational& scale,
                              unsigned long power);
  // Uniform rationals with denominator 2^32, reproducible from the seed.
  static TargetSeq seeded_uniform(std::uint64_t seed);

  Kind kind() const { return kind_; }
  const std::string& label() const { return label_; }
  GammaValue at(long q) const;

  // Finite-set introspection; other kinds reject.
  std::size_t class_count() const;
  std::size_t class_of(long q) const;
  const std::vector<GammaValue>& sigmas() const;

 private:
  TargetSeq() = default;

  Kind kind_ = Kind::kConstant;
  std::vector<GammaValue> sigmas_;
  std::function<std::size_t(long)> assign_;
  Rational limit_, scale_;
  unsigned long power_ = 2;
  std::optional<SeededStream> stream_;
  std::string label_;
};

// Grammar: "const:R" | "surd:sqrt2m1|sqrt3m1|golden" | "random" |
// "alt:R1,R2" (R1 on even q, R2 on odd q). The seed only matters for
// "random".
TargetSeq make_gamma(const std::string& spec, std::uint64_t seed);

// A total partition of {1, 2, ...} into classes 1..l.
class PartitionSpec {
 public:
  // Class of q is (q mod modulus) + 1.
  static PartitionSpec residues(long modulus);
  // Two classes: even-index blocks, and everything else (q = 1 included).
  static PartitionSpec doubly_exponential_blocks();
  static PartitionSpec custom(long classes, std::function<long(long)> classify,
                              std::string label);

  long classes() const { return classes_; }
  long class_of(long q) const;  // 1-based, validated
  const std::string& label() const { return label_; }

 private:
  PartitionSpec() = default;

  long classes_ = 1;
  std::function<long(long)> classify_;
  std::string label_;
};

// Grammar: "residues:M" | "blocks".
PartitionSpec make_partition(const std::string& spec);

// Winner of the weighted-sum comparison at level Q: per class k the sum of
// phi(q) psi(q) / q over q in the class with q <= Q, all exact. The winner
// is the smallest class index attaining the maximum, so its sum is at least
// total / l.
struct PigeonholeResult {
  long winner = 1;
  std::vector<Rational> sums;
  Rational total;
};

PigeonholeResult pigeonhole_select(const PartitionSpec& partition, const PsiSpec& psi,
                                   long Q, const SieveTables& tables);

// Same comparison for psi kinds that only bracket. Sums are certified
// enclosures; the winner is certified once its lower end beats every other
// class's upper end, escalating precision until both the argmax and the
// winner >= total / l check are decided. Exact psi delegates to
// pigeonhole_select. Throws PrecisionError when the cap cannot separate.
struct PigeonholeBounds {
  long winner = 1;
  std::vector<FloatInterval> sums;
  FloatInterval total;
  bool certified = false;
};

PigeonholeBounds pigeonhole_select_bounds(const PartitionSpec& partition, const PsiSpec& psi,
                                          long Q, const SieveTables& tables,
                                          long start_prec = 128);

}  // namespace diolab
