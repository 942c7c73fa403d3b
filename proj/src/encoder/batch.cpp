// SPDX-License-Identifier: Apache-2.0
#include "grupack/encoder/batch.hpp"

#include <algorithm>

#include "grupack/encoder/config.hpp"

namespace grupack::enc {

num::Tensor SequenceBatch::mask() const {
  num::Tensor m({batch_size(), max_length()});
  for (std::size_t b = 0; b < batch_size(); ++b)
    for (std::size_t t = 0; t < lengths[b]; ++t) m.at(b, t) = 1.0;
  return m;
}

seg::BoundaryVector SequenceBatch::tier(seg::Level level, std::size_t b) const {
  auto it = tiers.find(level);
  if (it == tiers.end()) {
    throw ConfigError("batch carries no " + seg::to_string(level) + " tier");
  }
  const auto& row = it->second.at(b);
  return {seg::Bits(row.begin(), row.begin() + static_cast<long>(lengths[b])), level};
}

SequenceBatch make_sequence_batch(const std::vector<const seg::Utterance*>& items,
                                  BoundarySource source) {
  if (items.empty()) throw num::DimensionError("empty batch");
  const std::size_t d = items.front()->frames.dim(1);
  std::size_t t_max = 0;
  for (const auto* u : items) {
    if (u->frames.rank() != 2 || u->frames.dim(1) != d) {
      throw num::DimensionError("utterance " + u->id + " has frames " +
                                num::shape_string(u->frames.shape()) +
                                ", batch expects width " + std::to_string(d));
    }
    t_max = std::max(t_max, u->length());
  }
  const std::size_t B = items.size();
  num::Tensor data({B, t_max, d});
  SequenceBatch batch;
  batch.lengths.resize(B);
  for (std::size_t b = 0; b < B; ++b) {
    const auto& f = items[b]->frames;
    batch.lengths[b] = f.dim(0);
    std::copy(f.values().begin(), f.values().end(), data.data() + b * t_max * d);
  }
  // Only levels present on every item are carried.
  const auto tiers_of = [source](const seg::Utterance* u) -> const seg::TierMap& {
    return source == BoundarySource::true_tiers ? u->tiers : u->random_tiers;
  };
  for (seg::Level level : seg::kAllLevels) {
    const bool everywhere = std::all_of(items.begin(), items.end(), [&](const auto* u) {
      return tiers_of(u).count(level) > 0;
    });
    if (!everywhere) continue;
    auto& rows = batch.tiers[level];
    for (const auto* u : items) {
      seg::Bits row = tiers_of(u).at(level).bits;
      if (row.size() != u->length()) {
        throw seg::SegmentationError(u->id + ": " + seg::to_string(level) +
                                     " tier length differs from frame count");
      }
      row.resize(t_max, 0);
      rows.push_back(std::move(row));
    }
  }
  batch.data = num::constant(std::move(data));
  return batch;
}

void validate(const SequenceBatch& batch) {
  const auto& x = batch.data.value();
  if (x.rank() != 3 || x.dim(0) != batch.lengths.size()) {
    throw num::DimensionError("batch data " + num::shape_string(x.shape()) +
                              " does not match " + std::to_string(batch.lengths.size()) +
                              " lengths");
  }
  const std::size_t T = x.dim(1), d = x.dim(2);
  for (std::size_t b = 0; b < batch.lengths.size(); ++b) {
    if (batch.lengths[b] == 0 || batch.lengths[b] > T) {
      throw num::DimensionError("item length out of range");
    }
    for (std::size_t t = batch.lengths[b]; t < T; ++t)
      for (std::size_t k = 0; k < d; ++k)
        if (x.at(b, t, k) != 0.0) throw num::DimensionError("non-zero padding");
  }
  for (const auto& [level, rows] : batch.tiers) {
    if (rows.size() != batch.lengths.size()) throw num::DimensionError("tier row count");
    for (std::size_t b = 0; b < rows.size(); ++b) {
      if (rows[b].size() != T) throw num::DimensionError("tier row length");
      for (std::size_t t = batch.lengths[b]; t < T; ++t)
        if (rows[b][t]) throw num::DimensionError("boundary bit in padding");
    }
  }
}

}  // namespace grupack::enc
