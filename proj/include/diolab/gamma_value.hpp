// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <variant>

#include "diolab/enclosure.hpp"
#include "diolab/quad.hpp"
#include "diolab/rational.hpp"

namespace diolab {

// A target offset: exact rational, exact quadratic surd, or a refinable real
// bracket. The first two admit exact comparisons; the bracket refines on
// demand and fails loudly at the precision cap.
using GammaValue = std::variant<Rational, Quad, RealEnclosure>;

RealEnclosure to_enclosure(const GammaValue& g);

}  // namespace diolab
