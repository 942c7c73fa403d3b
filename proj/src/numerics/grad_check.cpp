// SPDX-License-Identifier: Apache-2.0
#include "grupack/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace grupack::num {

namespace {
double eval_scalar(const std::function<Var()>& f) {
  NoGradGuard guard;
  const Var out = f();
  if (out.size() != 1) {
    throw DimensionError("grad_check needs a scalar function, got " +
                         shape_string(out.shape()));
  }
  const double v = out.value()[0];
  if (!std::isfinite(v)) throw NumericError("grad_check: non-finite f");
  return v;
}
}  // namespace

double grad_check(const std::function<Var()>& f, const std::vector<Var>& params,
                  double eps) {
  if (!(eps > 0.0 && eps <= 1e-2)) {
    throw std::invalid_argument("grad_check: eps must be in (0, 1e-2]");
  }
  zero_grad(params);
  const Var out = f();
  if (out.size() != 1) {
    throw DimensionError("grad_check needs a scalar function, got " +
                         shape_string(out.shape()));
  }
  if (!std::isfinite(out.value()[0])) {
    throw NumericError("grad_check: non-finite f");
  }
  backward(out);

  double worst = 0.0;
  for (const auto& p : params) {
    Tensor& t = p.node().value;
    t.ensure_grad();
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      t[i] = saved + eps;
      const double up = eval_scalar(f);
      t[i] = saved - eps;
      const double down = eval_scalar(f);
      t[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double err =
          std::abs(t.grad()[i] - numeric) / std::max(1.0, std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace grupack::num
