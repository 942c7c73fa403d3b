// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "grupack/numerics/autograd.hpp"

namespace grupack::num {

/// Compares the tape gradient of a scalar function against central finite
/// differences, entry by entry over every parameter.
///
/// `f` must rebuild its graph from the current parameter values on each call.
/// Returns max |analytic - numeric| / max(1, |numeric|). Parameter gradients
/// are zeroed first and hold the analytic gradient on return; parameter values
/// are restored.
double grad_check(const std::function<Var()>& f, const std::vector<Var>& params,
                  double eps = 1e-5);

}  // namespace grupack::num
