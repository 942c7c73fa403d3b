// SPDX-License-Identifier: Apache-2.0
#include "grupack/numerics/adam.hpp"

#include <cmath>

namespace grupack::num {

void adam_update(AdamState& state, const std::vector<Var>& params) {
  std::size_t count = 0;
  for (const auto& p : params) {
    const auto g = p.grad();
    for (double x : g) {
      if (!std::isfinite(x)) throw NumericError("adam_update: non-finite gradient");
    }
    count += p.size();
  }
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(count, 0.0);
    state.v.assign(count, 0.0);
  }
  if (state.m.size() != count || state.v.size() != count) {
    throw DimensionError("adam_update: moment size " +
                         std::to_string(state.m.size()) + " vs parameter count " +
                         std::to_string(count));
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  std::size_t k = 0;
  for (const auto& p : params) {
    Tensor& value = p.node().value;
    const auto g = value.grad();
    for (std::size_t i = 0; i < value.size(); ++i, ++k) {
      const double gi = g.empty() ? 0.0 : g[i];
      state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * gi;
      state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * gi * gi;
      const double m_hat = state.m[k] / c1;
      const double v_hat = state.v[k] / c2;
      value[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

}  // namespace grupack::num
