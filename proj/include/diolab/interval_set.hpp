// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "diolab/enclosure.hpp"
#include "diolab/rational.hpp"

namespace diolab {

struct Arc {
  Rational lo, hi;  // 0 <= lo < hi <= 1 once normalized
};

// Finite union of arcs on the circle R/Z, kept in a canonical form: segments
// sorted, pairwise disjoint, touching segments merged, arcs crossing the 0/1
// seam stored split at the seam. Measure is the exact sum of segment lengths
// and is cached. Values are immutable after construction.
class CircleIntervalSet {
 public:
  CircleIntervalSet() = default;

  // Reduces arbitrary (left, right) arcs mod 1, splits wrap-arounds, sorts,
  // merges. Arcs must have nonnegative length; length >= 1 saturates to the
  // full circle and sets the clamped flag. Idempotent.
  static CircleIntervalSet normalize(const std::vector<std::pair<Rational, Rational>>& raw);
  static CircleIntervalSet empty() { return CircleIntervalSet(); }
  static CircleIntervalSet full();

  const std::vector<Arc>& segments() const { return segs_; }
  const Rational& measure() const { return measure_; }
  bool is_empty() const { return segs_.empty(); }
  bool is_full() const { return measure_ == 1; }
  // True when normalize saw an arc of length > 1 (saturated input).
  bool clamped() const { return clamped_; }

  // Membership with endpoints owned by the arc to their left: x in (lo, hi].
  bool contains(const Rational& x) const;

  friend CircleIntervalSet intersect(const CircleIntervalSet& a, const CircleIntervalSet& b);
  friend CircleIntervalSet unite(const CircleIntervalSet& a, const CircleIntervalSet& b);

 private:
  std::vector<Arc> segs_;
  Rational measure_ = 0;
  bool clamped_ = false;
};

CircleIntervalSet intersect(const CircleIntervalSet& a, const CircleIntervalSet& b);
CircleIntervalSet unite(const CircleIntervalSet& a, const CircleIntervalSet& b);

// The set {alpha : ||q*alpha - gamma|| < psi} for rational gamma: q arcs of
// length 2*psi/q centered at (a + gamma)/q, measure exactly 2*psi.
// Requires 0 <= psi <= 1/2 (callers clamp; see scenarios); psi = 0 gives the
// empty set. gamma enters mod 1.
CircleIntervalSet target_set(long q, const Rational& gamma, const Rational& psi);

struct TargetSetResult {
  CircleIntervalSet set;        // outer approximation: contains the true set
  Rational measure_error;      // |measure(set) - 2*psi| <= measure_error
};

// Same set for gamma known only by enclosure, refined to width <= 2^-prec_bits
// first. The returned set uses outward-rounded arc endpoints, so it contains
// the true set and its measure is within measure_error (<= 2^-prec_bits) of
// 2*psi.
TargetSetResult target_set_enclosure(long q, RealEnclosure gamma, const Rational& psi,
                                     unsigned prec_bits);

}  // namespace diolab
