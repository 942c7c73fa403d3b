// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

namespace grupack::eval {

struct ZTestResult {
  double z = 0.0;
  double p_value = 1.0;
  double p1 = 0.0;
  double p2 = 0.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

inline constexpr double kSignificance = 1e-2;

/// Standard normal CDF, computed as erfc(-x / sqrt 2) / 2.
double normal_cdf(double x);

/// Two-sided two-proportion test with pooled variance. When the pooled
/// proportion is 0 or 1 the result is z = 0, p = 1 for equal proportions;
/// otherwise it throws "degenerate pooled proportion".
ZTestResult z_test(std::size_t x1, std::size_t n1, std::size_t x2, std::size_t n2);

inline bool significant(const ZTestResult& r) { return r.p_value < kSignificance; }

}  // namespace grupack::eval
