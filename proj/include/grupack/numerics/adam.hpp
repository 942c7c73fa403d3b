// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "grupack/numerics/autograd.hpp"

namespace grupack::num {

struct AdamState {
  std::uint64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam step over the flattened parameter list, reading
/// each parameter's accumulated gradient. Moments are sized on first use.
/// Throws NumericError before touching anything if a gradient is non-finite.
void adam_update(AdamState& state, const std::vector<Var>& params);

}  // namespace grupack::num
