// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "grupack/encoder/gru.hpp"
#include "grupack/encoder/layers.hpp"

namespace grupack::enc {

struct SpeechEncoder {
  EncoderConfig config;
  ConvParams conv;
  std::vector<GruParams> layers;
  AttentionParams attention;
};

struct Model {
  SpeechEncoder speech;
  ImageParams image;

  /// Fresh parameters for a validated config, deterministic per seed.
  static Model init(const EncoderConfig& config, std::uint64_t seed);

  std::vector<num::Var> parameters() const;
  std::vector<std::pair<std::string, num::Var>> named_parameters() const;

  /// Deep copy of all parameter values.
  Model clone() const;
  /// Copies values from a model with the same architecture.
  void assign(const Model& other);
};

/// Runs each layer and reports per-layer output lengths, for bookkeeping.
struct EncodeTrace {
  std::vector<std::vector<std::size_t>> lengths_after_layer;
};

/// conv -> recurrent layers -> attention -> unit-norm rows, [B, embed_dim].
/// A layer gets a residual connection when it is not the first recurrent
/// layer and its input and output agree in per-item length and width.
num::Var encode_utterance(const SpeechEncoder& encoder, const SequenceBatch& batch,
                          EncodeTrace* trace = nullptr,
                          num::Exec exec = num::default_exec());

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

std::string describe(const EncoderConfig& config);

}  // namespace grupack::enc
