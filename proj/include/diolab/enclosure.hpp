// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <utility>

#include "diolab/quad.hpp"
#include "diolab/rational.hpp"

namespace diolab {

// Outward rational bracket [lo, hi] around a real value, with a generator
// that can reproduce the bracket at any requested precision. Refinement never
// moves the value outside the current bracket. Width cap: once the generator
// has been driven to kCapBits without reaching the requested width, refine()
// fails loudly rather than returning a silent wrong answer.
class RealEnclosure {
 public:
  using Generator = std::function<std::pair<Rational, Rational>(unsigned bits)>;

  static constexpr unsigned kCapBits = 256;

  explicit RealEnclosure(Rational exact_value);
  RealEnclosure(Generator gen, unsigned start_bits = 32);
  static RealEnclosure from_quad(const Quad& value, unsigned start_bits = 32);

  const Rational& lo() const { return lo_; }
  const Rational& hi() const { return hi_; }
  Rational width() const { return hi_ - lo_; }
  bool is_exact() const { return lo_ == hi_; }
  unsigned bits() const { return bits_; }

  // Shrink the bracket to width <= eps; throws PrecisionError past the cap.
  void refine(const Rational& eps);
  // Same, but reports failure instead of throwing.
  bool try_refine(const Rational& eps);
  void refine_bits(unsigned bits);

 private:
  Rational lo_, hi_;
  Generator gen_;  // empty for exact values
  unsigned bits_ = 0;
};

}  // namespace diolab
