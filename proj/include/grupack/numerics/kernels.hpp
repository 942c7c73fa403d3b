// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

namespace grupack::num {

/// Execution policy for the data-parallel kernels. `serial` is the reference
/// implementation; `parallel` splits independent output rows (or batch items)
/// across OpenMP threads. Both produce bitwise-identical results because each
/// output element is reduced by exactly one thread in a fixed order.
enum class Exec { serial, parallel };

Exec default_exec();
void set_default_exec(Exec exec);

/// C (m x n) += op(A) * op(B), op(A) is m x k, op(B) is k x n.
/// A is stored m x k (or k x m when trans_a), B is k x n (or n x k when trans_b).
void gemm_accumulate(Exec exec, bool trans_a, bool trans_b, std::size_t m,
                     std::size_t n, std::size_t k, const double* a,
                     const double* b, double* c);

/// Serial and parallel entry points kept side by side for tests and benches.
inline void gemm_serial(bool ta, bool tb, std::size_t m, std::size_t n,
                        std::size_t k, const double* a, const double* b,
                        double* c) {
  gemm_accumulate(Exec::serial, ta, tb, m, n, k, a, b, c);
}
inline void gemm_parallel(bool ta, bool tb, std::size_t m, std::size_t n,
                          std::size_t k, const double* a, const double* b,
                          double* c) {
  gemm_accumulate(Exec::parallel, ta, tb, m, n, k, a, b, c);
}

// y (n) += x (k) * W (k x n)
void vecmat_accumulate(std::size_t k, std::size_t n, const double* x,
                       const double* w, double* y);
// y (k) += W (k x n) * g (n)
void matvec_accumulate(std::size_t k, std::size_t n, const double* w,
                       const double* g, double* y);
// W (k x n) += x (k) outer g (n)
void outer_accumulate(std::size_t k, std::size_t n, const double* x,
                      const double* g, double* w);

}  // namespace grupack::num
