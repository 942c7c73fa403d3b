// SPDX-License-Identifier: Apache-2.0
#include "grupack/training/loss.hpp"

#include <cmath>
#include <stdexcept>

#include "grupack/numerics/kernels.hpp"

namespace grupack::train {

using num::Tensor;
using num::Var;

namespace {
void check_unit_rows(const Tensor& t, const char* what) {
  for (std::size_t i = 0; i < t.dim(0); ++i) {
    double ss = 0.0;
    for (std::size_t j = 0; j < t.dim(1); ++j) ss += t.at(i, j) * t.at(i, j);
    if (std::abs(std::sqrt(ss) - 1.0) > kUnitNormTolerance) {
      throw std::invalid_argument(std::string("contrastive_loss: ") + what + " row " +
                                  std::to_string(i) + " is not unit-norm");
    }
  }
}
}  // namespace

Var contrastive_loss(const Var& utterances, const Var& images, double alpha) {
  const Tensor& U = utterances.value();
  const Tensor& I = images.value();
  if (U.rank() != 2 || U.shape() != I.shape()) {
    throw num::DimensionError("contrastive_loss: " + num::shape_string(U.shape()) + " vs " +
                              num::shape_string(I.shape()));
  }
  check_unit_rows(U, "utterance");
  check_unit_rows(I, "image");
  const std::size_t B = U.dim(0), e = U.dim(1);

  // sim[p, q] = u_p . i_q
  std::vector<double> sim(B * B, 0.0);
  num::gemm_accumulate(num::Exec::serial, false, true, B, B, e, U.data(), I.data(), sim.data());
  std::vector<double> dsim(B * B, 0.0);  // dL/dsim
  double loss = 0.0;
  for (std::size_t p = 0; p < B; ++p) {
    const double pos = sim[p * B + p];
    for (std::size_t q = 0; q < B; ++q) {
      if (q == p) continue;
      // Other utterance against this image.
      const double t1 = alpha - pos + sim[q * B + p];
      if (t1 > 0.0) {
        loss += t1;
        dsim[p * B + p] -= 1.0;
        dsim[q * B + p] += 1.0;
      }
      // This utterance against another image.
      const double t2 = alpha - pos + sim[p * B + q];
      if (t2 > 0.0) {
        loss += t2;
        dsim[p * B + p] -= 1.0;
        dsim[p * B + q] += 1.0;
      }
    }
  }
  return num::make_op(Tensor::scalar(loss), {utterances, images},
                      [B, e, dsim = std::move(dsim)](num::Node& self) {
                        const double g = self.value.grad()[0];
                        std::vector<double> scaled(dsim);
                        for (auto& v : scaled) v *= g;
                        const Var& u = self.parents[0];
                        const Var& i = self.parents[1];
                        // dU = dS I, dI = dS^T U
                        if (auto gu = num::grad_sink(u); !gu.empty())
                          num::gemm_accumulate(num::Exec::serial, false, false, B, e, B,
                                               scaled.data(), i.value().data(), gu.data());
                        if (auto gi = num::grad_sink(i); !gi.empty())
                          num::gemm_accumulate(num::Exec::serial, true, false, B, e, B,
                                               scaled.data(), u.value().data(), gi.data());
                      });
}

}  // namespace grupack::train
