// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <vector>

#include "grupack/numerics/autograd.hpp"
#include "grupack/segmentation/utterance.hpp"

namespace grupack::enc {

enum class BoundarySource { true_tiers, random_tiers };

/// Padded batch of sequences, data shaped [B, T_max, d].
///
/// Invariants: positions t >= lengths[b] hold zero vectors and zero boundary
/// bits; every tier row has T_max entries.
struct SequenceBatch {
  num::Var data;
  std::vector<std::size_t> lengths;
  std::map<seg::Level, std::vector<seg::Bits>> tiers;

  std::size_t batch_size() const { return lengths.size(); }
  std::size_t max_length() const { return data.shape()[1]; }
  std::size_t feature_dim() const { return data.shape()[2]; }

  /// [B, T_max] with 1 at valid positions.
  num::Tensor mask() const;
  /// Unpadded tier of item b.
  seg::BoundaryVector tier(seg::Level level, std::size_t b) const;
};

/// Pads utterances into one batch, carrying the tiers selected by `source`.
SequenceBatch make_sequence_batch(const std::vector<const seg::Utterance*>& items,
                                  BoundarySource source = BoundarySource::true_tiers);

/// Checks the padding and tier-length invariants.
void validate(const SequenceBatch& batch);

}  // namespace grupack::enc
