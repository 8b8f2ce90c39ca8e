// SPDX-License-Identifier: Apache-2.0
#include "diolab/interval_set.hpp"

#include <algorithm>

#include "diolab/errors.hpp"

namespace diolab {

CircleIntervalSet CircleIntervalSet::full() {
  CircleIntervalSet s;
  s.segs_.push_back({Rational(0), Rational(1)});
  s.measure_ = 1;
  return s;
}

CircleIntervalSet CircleIntervalSet::normalize(
    const std::vector<std::pair<Rational, Rational>>& raw) {
  CircleIntervalSet out;
  bool saturated = false, clamped = false;
  for (const auto& [left, right] : raw) {
    Rational len = right - left;
    if (len < 0) throw UsageError("arc with negative length");
    if (len > 1) clamped = true;
    if (len >= 1) saturated = true;
  }
  if (saturated) {
    CircleIntervalSet res = full();
    res.clamped_ = clamped;
    return res;
  }
  std::vector<Arc> segs;
  for (const auto& [left, right] : raw) {
    Rational len = right - left;
    if (len == 0) continue;
    Rational lo = mod1(left);
    Rational hi = lo + len;
    if (hi > 1) {
      segs.push_back({lo, Rational(1)});
      segs.push_back({Rational(0), hi - 1});
    } else {
      segs.push_back({lo, hi});
    }
  }
  std::sort(segs.begin(), segs.end(),
            [](const Arc& a, const Arc& b) { return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi); });
  for (const Arc& a : segs) {
    if (!out.segs_.empty() && a.lo <= out.segs_.back().hi) {
      if (a.hi > out.segs_.back().hi) out.segs_.back().hi = a.hi;
    } else {
      out.segs_.push_back(a);
    }
  }
  out.measure_ = 0;
  for (const Arc& a : out.segs_) out.measure_ += a.hi - a.lo;
  if (out.measure_ >= 1) return full();
  return out;
}

bool CircleIntervalSet::contains(const Rational& x) const {
  Rational v = mod1(x);
  if (v == 0) v = 1;  // the seam point is owned by an arc ending at 1
  auto it = std::upper_bound(segs_.begin(), segs_.end(), v,
                             [](const Rational& val, const Arc& a) { return val <= a.lo; });
  if (it == segs_.begin()) return false;
  --it;
  return v > it->lo && v <= it->hi;
}

CircleIntervalSet intersect(const CircleIntervalSet& a, const CircleIntervalSet& b) {
  CircleIntervalSet out;
  std::size_t i = 0, j = 0;
  while (i < a.segs_.size() && j < b.segs_.size()) {
    const Arc& x = a.segs_[i];
    const Arc& y = b.segs_[j];
    Rational lo = std::max(x.lo, y.lo);
    Rational hi = std::min(x.hi, y.hi);
    if (lo < hi) {
      out.segs_.push_back({lo, hi});
      out.measure_ += hi - lo;
    }
    if (x.hi <= y.hi)
      ++i;
    else
      ++j;
  }
  return out;
}

CircleIntervalSet unite(const CircleIntervalSet& a, const CircleIntervalSet& b) {
  std::vector<std::pair<Rational, Rational>> raw;
  raw.reserve(a.segs_.size() + b.segs_.size());
  for (const Arc& s : a.segs_) raw.emplace_back(s.lo, s.hi);
  for (const Arc& s : b.segs_) raw.emplace_back(s.lo, s.hi);
  return CircleIntervalSet::normalize(raw);
}

CircleIntervalSet target_set(long q, const Rational& gamma, const Rational& psi) {
  if (q < 1) throw UsageError("q must be positive");
  if (psi < 0) throw UsageError("psi must be nonnegative");
  if (psi > make_rational(1, 2)) throw UsageError("psi > 1/2; clamp before building sets");
  if (psi == 0) return CircleIntervalSet::empty();
  Rational g = mod1(gamma);
  Rational half = psi / q;
  std::vector<std::pair<Rational, Rational>> raw;
  raw.reserve(static_cast<std::size_t>(q));
  for (long a = 0; a < q; ++a) {
    Rational center = (a + g) / q;
    raw.emplace_back(center - half, center + half);
  }
  return CircleIntervalSet::normalize(raw);
}

TargetSetResult target_set_enclosure(long q, RealEnclosure gamma, const Rational& psi,
                                     unsigned prec_bits) {
  if (q < 1) throw UsageError("q must be positive");
  if (psi < 0 || psi > make_rational(1, 2))
    throw UsageError("psi outside [0, 1/2]; clamp before building sets");
  gamma.refine(pow2_rat(-static_cast<long>(prec_bits)));
  if (psi == 0) return {CircleIntervalSet::empty(), Rational(0)};
  Rational half = psi / q;
  Rational glo = gamma.lo(), ghi = gamma.hi();
  std::vector<std::pair<Rational, Rational>> raw;
  raw.reserve(static_cast<std::size_t>(q));
  for (long a = 0; a < q; ++a) {
    raw.emplace_back((a + glo) / q - half, (a + ghi) / q + half);
  }
  return {CircleIntervalSet::normalize(raw), gamma.width()};
}

}  // namespace diolab
