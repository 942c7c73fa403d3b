// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "grupack/encoder/model.hpp"
#include "grupack/training/dataset.hpp"

namespace grupack::train {

struct TrainConfig {
  double margin_alpha = 0.2;
  double lr = 2e-4;
  std::size_t batch_size = 16;
  std::size_t epochs = 30;
  std::uint64_t seed = 1;
  std::size_t eval_every = 1;
};

/// Throws std::invalid_argument on margin <= 0, batch_size < 2, lr < 0,
/// zero epochs or zero eval_every.
void validate(const TrainConfig& tc);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;  // mean over batches
  std::optional<double> val_r1;
};

struct TrainResult {
  enc::Model best;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_r1 = -1.0;
};

/// Called after every epoch; used for progress logging.
using EpochCallback = std::function<void(const EpochRecord&)>;

/// Adam on the contrastive loss. Validation R@1 is measured every
/// `eval_every` epochs and after the last one; the returned model is the
/// snapshot with the highest validation R@1, earliest epoch on ties.
///
/// With BoundarySource::random_tiers, utterances without random tiers get
/// shuffled ones drawn once from random_tier_seed(tc.seed), used for training
/// and validation alike; the dataset passed in is not modified.
TrainResult train(const enc::Model& init, const PairedDataset& ds, const TrainConfig& tc,
                  enc::BoundarySource source = enc::BoundarySource::true_tiers,
                  const EpochCallback& on_epoch = {});

std::uint64_t random_tier_seed(std::uint64_t run_seed);

/// Mean contrastive loss over a split without updating anything.
double mean_loss(const enc::Model& model, const PairedDataset& ds, Split split,
                 const TrainConfig& tc, enc::BoundarySource source);

}  // namespace grupack::train
