// SPDX-License-Identifier: Apache-2.0
#include "diolab/enclosure.hpp"

#include "diolab/errors.hpp"

namespace diolab {

RealEnclosure::RealEnclosure(Rational exact_value)
    : lo_(exact_value), hi_(std::move(exact_value)) {}

RealEnclosure::RealEnclosure(Generator gen, unsigned start_bits)
    : gen_(std::move(gen)), bits_(start_bits) {
  auto [lo, hi] = gen_(bits_);
  if (lo > hi) throw UsageError("enclosure generator produced lo > hi");
  lo_ = lo;
  hi_ = hi;
}

RealEnclosure RealEnclosure::from_quad(const Quad& value, unsigned start_bits) {
  if (value.is_rational()) return RealEnclosure(value.a());
  return RealEnclosure([value](unsigned bits) { return value.enclosure(bits); }, start_bits);
}

void RealEnclosure::refine_bits(unsigned bits) {
  if (!gen_ || bits <= bits_) return;
  auto [lo, hi] = gen_(bits);
  if (lo > hi) throw UsageError("enclosure generator produced lo > hi");
  // Generators may be oblivious to earlier brackets; keep the tightest.
  if (lo > lo_) lo_ = lo;
  if (hi < hi_) hi_ = hi;
  if (lo_ > hi_) throw UsageError("enclosure refinement produced empty bracket");
  bits_ = bits;
}

bool RealEnclosure::try_refine(const Rational& eps) {
  if (eps <= 0) return width() == 0;
  while (width() > eps) {
    if (!gen_ || bits_ >= kCapBits) return false;
    refine_bits(bits_ >= kCapBits / 2 ? kCapBits : bits_ * 2);
  }
  return true;
}

void RealEnclosure::refine(const Rational& eps) {
  if (!try_refine(eps))
    throw PrecisionError("enclosure refinement cap (2^-" + std::to_string(kCapBits) +
                         ") reached before width <= " + eps.get_str());
}

}  // namespace diolab
