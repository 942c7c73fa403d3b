// SPDX-License-Identifier: Apache-2.0
#include "grupack/evaluation/ztest.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace grupack::eval {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

ZTestResult z_test(std::size_t x1, std::size_t n1, std::size_t x2, std::size_t n2) {
  if (n1 == 0 || n2 == 0) throw std::invalid_argument("z_test: trial counts must be positive");
  if (x1 > n1 || x2 > n2) throw std::invalid_argument("z_test: successes exceed trials");
  ZTestResult r;
  r.n1 = n1;
  r.n2 = n2;
  r.p1 = static_cast<double>(x1) / static_cast<double>(n1);
  r.p2 = static_cast<double>(x2) / static_cast<double>(n2);
  // Exact integer test for equal proportions avoids rounding in p1 - p2.
  if (x1 * n2 == x2 * n1) return r;
  const double pooled = static_cast<double>(x1 + x2) / static_cast<double>(n1 + n2);
  const double var = pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2);
  if (!(var > 0.0)) throw std::domain_error("degenerate pooled proportion");
  r.z = (r.p1 - r.p2) / std::sqrt(var);
  // Two-sided tail 2(1 - Phi(|z|)) = erfc(|z| / sqrt 2), without cancellation.
  r.p_value = std::erfc(std::abs(r.z) / std::sqrt(2.0));
  return r;
}

}  // namespace grupack::eval
