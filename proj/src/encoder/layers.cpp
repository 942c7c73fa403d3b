// SPDX-License-Identifier: Apache-2.0
#include "grupack/encoder/layers.hpp"

#include <algorithm>
#include <cmath>

namespace grupack::enc {

using num::Tensor;
using num::Var;

Var init_weight(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t({rows, cols});
  for (auto& v : t.values()) v = dist(rng);
  return num::parameter(std::move(t));
}

ConvParams ConvParams::init(std::size_t d_in, const ConvSpec& spec, std::mt19937_64& rng) {
  ConvParams p;
  p.width = spec.width;
  p.stride = spec.stride;
  p.W = init_weight(spec.width * d_in, spec.filters, rng);
  p.b = num::parameter(Tensor({spec.filters}));
  return p;
}

SequenceBatch conv1d(const SequenceBatch& batch, const ConvParams& p, num::Exec exec) {
  const auto& X = batch.data.value();
  const std::size_t B = batch.batch_size(), T = batch.max_length(), din = batch.feature_dim();
  if (p.width == 0 || p.W.shape()[0] != p.width * din || p.b.size() != p.filters()) {
    throw num::DimensionError("conv1d: input width " + std::to_string(din) +
                              " does not match weights " + num::shape_string(p.W.shape()));
  }
  const std::size_t F = p.filters(), K = p.width, S = p.stride;
  const std::size_t left = (K - 1) / 2;
  const std::size_t T_out = (T + S - 1) / S;
  std::vector<std::size_t> out_len(B);
  for (std::size_t b = 0; b < B; ++b) out_len[b] = (batch.lengths[b] + S - 1) / S;

  // Input frame feeding output step `to` at window offset k, or -1 outside
  // the item.
  const auto source = [left, S](std::size_t to, std::size_t k, std::size_t len) -> long {
    const long t = static_cast<long>(to * S + k) - static_cast<long>(left);
    return (t < 0 || t >= static_cast<long>(len)) ? -1 : t;
  };

  Tensor out({B, T_out, F});
  const double* W = p.W.value().data();
  const double* bias = p.b.value().data();
  const long items = static_cast<long>(B);
#pragma omp parallel for schedule(static) if (exec == num::Exec::parallel && B > 1)
  for (long bi = 0; bi < items; ++bi) {
    const auto b = static_cast<std::size_t>(bi);
    for (std::size_t to = 0; to < out_len[b]; ++to) {
      double* y = out.data() + (b * T_out + to) * F;
      std::copy(bias, bias + F, y);
      for (std::size_t k = 0; k < K; ++k) {
        const long t = source(to, k, batch.lengths[b]);
        if (t < 0) continue;
        num::vecmat_accumulate(din, F, X.data() + (b * T + static_cast<std::size_t>(t)) * din,
                               W + k * din * F, y);
      }
    }
  }

  SequenceBatch result;
  result.lengths = out_len;
  if (S == 1) result.tiers = batch.tiers;
  const std::vector<std::size_t> in_len = batch.lengths;
  result.data = num::make_op(
      std::move(out), {batch.data, p.W, p.b},
      [=](num::Node& self) {
        const Var& input = self.parents[0];
        const double* Xd = input.value().data();
        const double* Wd = self.parents[1].value().data();
        const double* G = self.value.grad().data();
        auto gx = num::grad_sink(input);
        auto gw = num::grad_sink(self.parents[1]);
        auto gb = num::grad_sink(self.parents[2]);
        const std::size_t wsize = K * din * F;
        std::vector<double> item_gw(gw.empty() ? 0 : B * wsize, 0.0);
        const long items = static_cast<long>(B);
#pragma omp parallel for schedule(static) if (exec == num::Exec::parallel && B > 1)
        for (long bi = 0; bi < items; ++bi) {
          const auto b = static_cast<std::size_t>(bi);
          for (std::size_t to = 0; to < out_len[b]; ++to) {
            const double* g = G + (b * T_out + to) * F;
            for (std::size_t k = 0; k < K; ++k) {
              const long t = source(to, k, in_len[b]);
              if (t < 0) continue;
              const std::size_t at = (b * T + static_cast<std::size_t>(t)) * din;
              if (!gw.empty())
                num::outer_accumulate(din, F, Xd + at, g, item_gw.data() + b * wsize + k * din * F);
              if (!gx.empty()) num::matvec_accumulate(din, F, Wd + k * din * F, g, gx.data() + at);
            }
          }
        }
        if (!gw.empty()) {
          for (std::size_t b = 0; b < B; ++b)
            for (std::size_t i = 0; i < wsize; ++i) gw[i] += item_gw[b * wsize + i];
        }
        if (!gb.empty()) {
          for (std::size_t b = 0; b < B; ++b)
            for (std::size_t to = 0; to < out_len[b]; ++to)
              for (std::size_t f = 0; f < F; ++f) gb[f] += G[(b * T_out + to) * F + f];
        }
      });
  return result;
}

AttentionParams AttentionParams::init(std::size_t d_h, std::size_t att, std::mt19937_64& rng) {
  AttentionParams p;
  p.W = init_weight(d_h, att, rng);
  p.b = num::parameter(Tensor({att}));
  p.u = init_weight(att, 1, rng);
  return p;
}

Var weighted_sum_steps(const Var& alpha, const Var& data) {
  const auto& X = data.value();
  if (X.rank() != 3 || alpha.value().rank() != 2 || alpha.shape()[0] != X.dim(0) ||
      alpha.shape()[1] != X.dim(1)) {
    throw num::DimensionError("weighted_sum_steps: weights " +
                              num::shape_string(alpha.shape()) + " vs data " +
                              num::shape_string(X.shape()));
  }
  const std::size_t B = X.dim(0), T = X.dim(1), d = X.dim(2);
  Tensor out({B, d});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < T; ++t) {
      const double a = alpha.value().at(b, t);
      if (a == 0.0) continue;
      for (std::size_t k = 0; k < d; ++k) out.at(b, k) += a * X.at(b, t, k);
    }
  return num::make_op(std::move(out), {alpha, data}, [B, T, d](num::Node& self) {
    const Var& alpha = self.parents[0];
    const Var& data = self.parents[1];
    const auto g = self.value.grad();
    auto ga = num::grad_sink(alpha);
    auto gd = num::grad_sink(data);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t t = 0; t < T; ++t) {
        const double* x = data.value().data() + (b * T + t) * d;
        if (!ga.empty()) {
          double dot = 0.0;
          for (std::size_t k = 0; k < d; ++k) dot += g[b * d + k] * x[k];
          ga[b * T + t] += dot;
        }
        if (!gd.empty()) {
          const double a = alpha.value().at(b, t);
          for (std::size_t k = 0; k < d; ++k) gd[(b * T + t) * d + k] += a * g[b * d + k];
        }
      }
  });
}

Var attention_weights(const SequenceBatch& batch, const AttentionParams& p) {
  const std::size_t B = batch.batch_size(), T = batch.max_length(), d = batch.feature_dim();
  if (p.W.shape()[0] != d) {
    throw num::DimensionError("attention: hidden width " + std::to_string(d) +
                              " vs weights " + num::shape_string(p.W.shape()));
  }
  for (auto len : batch.lengths) {
    if (len == 0) throw num::NumericError("empty attention support");
  }
  const Var flat = num::reshape(batch.data, {B * T, d});
  const Var energy = num::tanh(num::add_row(num::matmul(flat, p.W), p.b));
  const Var scores = num::reshape(num::matmul(energy, p.u), {B, T});
  return num::masked_softmax(scores, batch.mask());
}

Var attention_pool(const SequenceBatch& batch, const AttentionParams& p) {
  return num::l2_normalize_rows(weighted_sum_steps(attention_weights(batch, p), batch.data));
}

ImageParams ImageParams::init(std::size_t in, std::size_t embed, std::mt19937_64& rng) {
  ImageParams p;
  p.W = init_weight(in, embed, rng);
  p.b = num::parameter(Tensor({embed}));
  return p;
}

Var encode_image(const Var& images, const ImageParams& p) {
  const Var x = images.value().rank() == 1 ? num::reshape(images, {1, images.size()}) : images;
  if (x.shape()[1] != p.W.shape()[0]) {
    throw num::DimensionError("encode_image: input " + num::shape_string(images.shape()) +
                              " vs projection " + num::shape_string(p.W.shape()));
  }
  return num::l2_normalize_rows(num::add_row(num::matmul(x, p.W), p.b));
}

}  // namespace grupack::enc
