// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grupack/encoder/batch.hpp"
#include "grupack/numerics/tensor.hpp"
#include "grupack/segmentation/utterance.hpp"

namespace grupack::train {

enum class Split { train, val, test };

std::string to_string(Split split);

struct Pair {
  std::size_t utterance = 0;
  std::size_t image = 0;
};

/// Spoken captions paired with image feature vectors. Several captions may
/// share one image; splits hold pair indices and are disjoint.
struct PairedDataset {
  std::vector<seg::Utterance> utterances;
  std::vector<std::string> image_ids;
  num::Tensor images;  // [n_images, image_dim]
  std::vector<Pair> pairs;
  std::vector<std::size_t> train, val, test;

  const std::vector<std::size_t>& split(Split s) const;
  std::size_t image_dim() const { return images.dim(1); }
};

/// Checks index validity and split disjointness.
void validate(const PairedDataset& ds);

struct TrainingBatch {
  enc::SequenceBatch speech;
  num::Tensor images;  // [B, image_dim]
  std::vector<std::size_t> pair_indices;
};

/// Shuffles the split's pairs with `seed` and cuts batches of `batch_size`.
/// A final short batch is kept when it has at least 2 pairs.
std::vector<TrainingBatch> make_batches(const PairedDataset& ds, Split split,
                                        std::size_t batch_size, std::uint64_t seed,
                                        enc::BoundarySource source = enc::BoundarySource::true_tiers);

/// Batch of the given pairs, in order.
TrainingBatch make_batch(const PairedDataset& ds, const std::vector<std::size_t>& pair_indices,
                         enc::BoundarySource source);

/// Deterministic 64-bit mix of a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Copy of `ds` where every utterance carries shuffled random_tiers.
PairedDataset with_random_tiers(const PairedDataset& ds, std::uint64_t seed);

}  // namespace grupack::train
