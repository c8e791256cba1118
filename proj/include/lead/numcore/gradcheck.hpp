#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "lead/numcore/tensor.hpp"

namespace lead::num {

// Compares backward() against central differences for every entry of every
// parameter and returns the worst relative error
//   |analytic − numeric| / max(1e-12, |analytic| + |numeric|).
// fn must rebuild its graph from the parameters' current values on each call.
//
// Central differences carry rounding noise of roughly eps·|f|/step, so an
// entry whose true derivative is zero or tiny (softmax shift invariance, a
// weight deep behind a saturated softmax) cannot meet a relative bound. With
// abs_tolerance > 0 an entry with |analytic − numeric| <= abs_tolerance counts
// as agreement, as in allclose; `excused`, when given, receives how many
// accepted entries had a relative error of 1e-4 or more.
double finite_difference_check(const std::function<Tensor()>& fn, std::vector<Tensor> params,
                               double step, double abs_tolerance = 0.0,
                               std::size_t* excused = nullptr);

}  // namespace lead::num
