// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "grupack/numerics/autograd.hpp"

namespace grupack::train {

inline constexpr double kUnitNormTolerance = 1e-6;

/// Bidirectional hinge loss over in-batch negatives with cosine distance
/// d(u, i) = 1 - u.i. Row p of `utterances` pairs with row p of `images`:
///
///   L = sum_p sum_{q != p} max(0, a + d(u_p, i_p) - d(u_q, i_p))
///                        + max(0, a + d(u_p, i_p) - d(u_p, i_q))
///
/// Rows must be unit-norm. The subgradient at a hinge point is 0.
num::Var contrastive_loss(const num::Var& utterances, const num::Var& images, double alpha);

}  // namespace grupack::train
