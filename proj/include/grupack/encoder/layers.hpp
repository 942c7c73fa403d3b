// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>

#include "grupack/encoder/batch.hpp"
#include "grupack/encoder/config.hpp"
#include "grupack/numerics/kernels.hpp"

namespace grupack::enc {

/// 1-D convolution over time. W is [width * d_in, filters]; row k * d_in + c
/// weighs channel c at window offset k.
struct ConvParams {
  num::Var W;
  num::Var b;
  std::size_t width = 0;
  std::size_t stride = 1;

  std::size_t input_dim() const { return W.shape()[0] / width; }
  std::size_t filters() const { return W.shape()[1]; }
  static ConvParams init(std::size_t d_in, const ConvSpec& spec, std::mt19937_64& rng);
};

/// Zero-padded convolution: left pad (width-1)/2, right pad the rest, so with
/// stride 1 every item keeps its length and its tiers. Output at padded
/// positions is zero.
SequenceBatch conv1d(const SequenceBatch& batch, const ConvParams& p,
                     num::Exec exec = num::default_exec());

/// Additive attention: e_t = u . tanh(W h_t + b), softmax over valid steps.
struct AttentionParams {
  num::Var W;  // d_h x attention_dim
  num::Var b;  // attention_dim
  num::Var u;  // attention_dim x 1
  static AttentionParams init(std::size_t d_h, std::size_t att, std::mt19937_64& rng);
};

/// Attention-weighted sum over valid steps, rows L2-normalised. [B, d_h].
num::Var attention_pool(const SequenceBatch& batch, const AttentionParams& p);

/// Attention weights alone, [B, T_max]; exposed for tests and inspection.
num::Var attention_weights(const SequenceBatch& batch, const AttentionParams& p);

/// out[b] = sum_t alpha[b, t] * data[b, t, :]
num::Var weighted_sum_steps(const num::Var& alpha, const num::Var& data);

struct ImageParams {
  num::Var W;  // image_in_dim x embed_dim
  num::Var b;  // embed_dim
  static ImageParams init(std::size_t in, std::size_t embed, std::mt19937_64& rng);
};

/// Linear projection then L2 normalisation. Accepts [in] or [B, in].
num::Var encode_image(const num::Var& images, const ImageParams& p);

/// Uniform in [-1/sqrt(rows), 1/sqrt(rows)].
num::Var init_weight(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

}  // namespace grupack::enc
