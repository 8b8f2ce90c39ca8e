// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "diolab/gamma_value.hpp"
#include "diolab/rational.hpp"

namespace diolab {

// All continued-fraction convergents A/B of gamma with B <= denom_bound, in
// lowest terms, denominators nondecreasing (a duplicate B = 1 pair appears
// when the second partial quotient is 1). Rational and surd inputs are
// processed exactly; bracket inputs refine as needed and throw
// PrecisionError when the cap cannot separate the next partial quotient.
std::vector<std::pair<Integer, Integer>> cf_convergents(
    const GammaValue& gamma, const Integer& denom_bound);

}  // namespace diolab
