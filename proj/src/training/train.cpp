// SPDX-License-Identifier: Apache-2.0
#include "grupack/training/train.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "grupack/evaluation/retrieval.hpp"
#include "grupack/numerics/adam.hpp"
#include "grupack/training/loss.hpp"

namespace grupack::train {

void validate(const TrainConfig& tc) {
  if (!(tc.margin_alpha > 0.0)) throw std::invalid_argument("train: margin must be positive");
  if (!(tc.lr >= 0.0)) throw std::invalid_argument("train: lr must be non-negative");
  if (tc.batch_size < 2) throw std::invalid_argument("train: batch_size must be at least 2");
  if (tc.epochs == 0) throw std::invalid_argument("train: epochs must be positive");
  if (tc.eval_every == 0) throw std::invalid_argument("train: eval_every must be positive");
}

std::uint64_t random_tier_seed(std::uint64_t run_seed) {
  return derive_seed(run_seed, 0x72616e64ULL);
}

namespace {

num::Var batch_loss(const enc::Model& model, const TrainingBatch& batch, double alpha) {
  num::Var u = enc::encode_utterance(model.speech, batch.speech);
  num::Var i = enc::encode_image(num::constant(batch.images), model.image);
  return contrastive_loss(u, i, alpha);
}

}  // namespace

double mean_loss(const enc::Model& model, const PairedDataset& ds, Split split,
                 const TrainConfig& tc, enc::BoundarySource source) {
  num::NoGradGuard no_grad;
  const auto batches = make_batches(ds, split, tc.batch_size, derive_seed(tc.seed, 0), source);
  double total = 0.0;
  for (const auto& b : batches) total += batch_loss(model, b, tc.margin_alpha).value()[0];
  return batches.empty() ? 0.0 : total / static_cast<double>(batches.size());
}

TrainResult train(const enc::Model& init, const PairedDataset& ds_in, const TrainConfig& tc,
                  enc::BoundarySource source, const EpochCallback& on_epoch) {
  validate(tc);
  enc::validate(init.speech.config);
  std::optional<PairedDataset> shuffled;
  const bool missing_random =
      std::any_of(ds_in.utterances.begin(), ds_in.utterances.end(),
                  [](const seg::Utterance& u) { return u.random_tiers.empty(); });
  if (source == enc::BoundarySource::random_tiers && missing_random) {
    shuffled = with_random_tiers(ds_in, random_tier_seed(tc.seed));
  }
  const PairedDataset& ds = shuffled ? *shuffled : ds_in;

  TrainResult result;
  enc::Model model = init.clone();
  result.best = model.clone();
  const auto params = model.parameters();
  num::AdamState adam;
  adam.lr = tc.lr;

  for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
    const auto batches =
        make_batches(ds, Split::train, tc.batch_size, derive_seed(tc.seed, epoch), source);
    if (batches.empty()) throw std::invalid_argument("train: training split yields no batch");
    double total = 0.0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      num::zero_grad(params);
      num::Var loss = batch_loss(model, batches[bi], tc.margin_alpha);
      const double value = loss.value()[0];
      if (!std::isfinite(value)) {
        throw num::NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                std::to_string(bi + 1) + " of " + std::to_string(batches.size()) +
                                " (value " + std::to_string(value) + ")");
      }
      num::backward(loss);
      num::adam_update(adam, params);
      total += value;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = total / static_cast<double>(batches.size());
    if (epoch % tc.eval_every == 0 || epoch == tc.epochs) {
      if (!ds.val.empty()) {
        const double r1 = eval::evaluate(model, ds, Split::val, source).recalls.at(1);
        rec.val_r1 = r1;
        if (r1 > result.best_val_r1) {
          result.best_val_r1 = r1;
          result.best_epoch = epoch;
          result.best.assign(model);
        }
      } else if (epoch == tc.epochs) {
        result.best_epoch = epoch;
        result.best.assign(model);
      }
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  num::zero_grad(params);
  return result;
}

}  // namespace grupack::train
