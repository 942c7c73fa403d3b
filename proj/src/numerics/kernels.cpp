// SPDX-License-Identifier: Apache-2.0
#include "grupack/numerics/kernels.hpp"

#include <atomic>

namespace grupack::num {

namespace {
std::atomic<Exec> g_default_exec{Exec::parallel};

// Below this many multiply-adds the OpenMP fork costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 16;
}  // namespace

Exec default_exec() { return g_default_exec.load(); }
void set_default_exec(Exec exec) { g_default_exec.store(exec); }

void gemm_accumulate(Exec exec, bool trans_a, bool trans_b, std::size_t m,
                     std::size_t n, std::size_t k, const double* a,
                     const double* b, double* c) {
  const bool par = exec == Exec::parallel && m > 1 && m * n * k >= kParallelWork;
  const long rows = static_cast<long>(m);
  if (!trans_b) {
#pragma omp parallel for schedule(static) if (par)
    for (long ii = 0; ii < rows; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      double* ci = c + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = trans_a ? a[p * m + i] : a[i * k + p];
        if (aip == 0.0) continue;
        const double* bp = b + p * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
      }
    }
  } else {
#pragma omp parallel for schedule(static) if (par)
    for (long ii = 0; ii < rows; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      double* ci = c + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double* bj = b + j * k;
        double acc = 0.0;
        if (trans_a) {
          for (std::size_t p = 0; p < k; ++p) acc += a[p * m + i] * bj[p];
        } else {
          const double* ai = a + i * k;
          for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
        }
        ci[j] += acc;
      }
    }
  }
}

void vecmat_accumulate(std::size_t k, std::size_t n, const double* x,
                       const double* w, double* y) {
  for (std::size_t p = 0; p < k; ++p) {
    const double xp = x[p];
    if (xp == 0.0) continue;
    const double* wp = w + p * n;
    for (std::size_t j = 0; j < n; ++j) y[j] += xp * wp[j];
  }
}

void matvec_accumulate(std::size_t k, std::size_t n, const double* w,
                       const double* g, double* y) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* wp = w + p * n;
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += wp[j] * g[j];
    y[p] += acc;
  }
}

void outer_accumulate(std::size_t k, std::size_t n, const double* x,
                      const double* g, double* w) {
  for (std::size_t p = 0; p < k; ++p) {
    const double xp = x[p];
    if (xp == 0.0) continue;
    double* wp = w + p * n;
    for (std::size_t j = 0; j < n; ++j) wp[j] += xp * g[j];
  }
}

}  // namespace grupack::num
