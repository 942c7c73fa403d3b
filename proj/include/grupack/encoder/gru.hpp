// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <vector>

#include "grupack/encoder/batch.hpp"
#include "grupack/encoder/config.hpp"
#include "grupack/numerics/kernels.hpp"

namespace grupack::enc {

/// GRU weights, row-vector convention: a_z = x W_z + h U_z + b_z.
///
///   z  = sigmoid(x W_z + h U_z + b_z)
///   r  = sigmoid(x W_r + h U_r + b_r)
///   h~ = tanh(x W_h + (r * h) U_h + b_h)
///   h' = (1 - z) * h + z * h~
struct GruParams {
  num::Var W_z, W_r, W_h;  // d_in x d_h
  num::Var U_z, U_r, U_h;  // d_h x d_h
  num::Var b_z, b_r, b_h;  // d_h

  std::size_t input_dim() const { return W_z.shape()[0]; }
  std::size_t hidden_dim() const { return W_z.shape()[1]; }
  std::vector<num::Var> list() const { return {W_z, W_r, W_h, U_z, U_r, U_h, b_z, b_r, b_h}; }
  static const std::vector<std::string>& names();

  /// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
  static GruParams init(std::size_t d_in, std::size_t d_h, std::mt19937_64& rng);
  static GruParams zeros(std::size_t d_in, std::size_t d_h);
};

/// Value-only single step.
std::vector<double> gru_step(std::span<const double> h_prev, std::span<const double> x,
                             const GruParams& p);

/// Differentiable single step on vectors.
num::Var gru_step(const num::Var& h_prev, const num::Var& x, const GruParams& p);

/// Runs the recurrence over every item of a [B, T, d_in] tensor and returns
/// [B, T, d_h]. When `resets` is given, the state entering step t is h0 = 0
/// whenever resets[b][t-1] == 1. Positions past an item's length output 0.
num::Var gru_sequence(const num::Var& data, const std::vector<std::size_t>& lengths,
                      const std::vector<seg::Bits>* resets, const GruParams& p,
                      num::Exec exec = num::default_exec());

SequenceBatch vanilla_forward(const SequenceBatch& batch, const GruParams& p,
                              num::Exec exec = num::default_exec());

/// Boundary-resetting recurrence. ALL keeps every step; KEEP keeps only the
/// segment-final steps, shortens each item to its segment count, and
/// re-expresses the tiers nested under `level` over the shorter sequence.
SequenceBatch packager_forward(const SequenceBatch& batch, seg::Level level, PackMode mode,
                               const GruParams& p, num::Exec exec = num::default_exec());

/// KEEP reduction on its own: gathers the frames where the `level` tier is set.
SequenceBatch keep_segment_ends(const SequenceBatch& batch, seg::Level level);

}  // namespace grupack::enc
