// SPDX-License-Identifier: Apache-2.0
#include "grupack/training/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

namespace grupack::train {

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

const std::vector<std::size_t>& PairedDataset::split(Split s) const {
  switch (s) {
    case Split::train: return train;
    case Split::val: return val;
    case Split::test: return test;
  }
  return train;
}

void validate(const PairedDataset& ds) {
  if (ds.images.rank() != 2 || ds.images.dim(0) != ds.image_ids.size()) {
    throw std::invalid_argument("dataset: image matrix does not match image ids");
  }
  for (const auto& p : ds.pairs) {
    if (p.utterance >= ds.utterances.size() || p.image >= ds.image_ids.size()) {
      throw std::invalid_argument("dataset: pair references a missing item");
    }
  }
  std::set<std::size_t> seen;
  for (const auto* s : {&ds.train, &ds.val, &ds.test}) {
    for (auto i : *s) {
      if (i >= ds.pairs.size()) throw std::invalid_argument("dataset: split index out of range");
      if (!seen.insert(i).second) throw std::invalid_argument("dataset: splits overlap");
    }
  }
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 over the combined value.
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

TrainingBatch make_batch(const PairedDataset& ds, const std::vector<std::size_t>& pair_indices,
                         enc::BoundarySource source) {
  TrainingBatch batch;
  batch.pair_indices = pair_indices;
  std::vector<const seg::Utterance*> items;
  const std::size_t dim = ds.image_dim();
  batch.images = num::Tensor({pair_indices.size(), dim});
  for (std::size_t k = 0; k < pair_indices.size(); ++k) {
    const Pair& p = ds.pairs.at(pair_indices[k]);
    items.push_back(&ds.utterances[p.utterance]);
    std::copy_n(ds.images.data() + p.image * dim, dim, batch.images.data() + k * dim);
  }
  batch.speech = enc::make_sequence_batch(items, source);
  return batch;
}

std::vector<TrainingBatch> make_batches(const PairedDataset& ds, Split split,
                                        std::size_t batch_size, std::uint64_t seed,
                                        enc::BoundarySource source) {
  if (batch_size < 2) throw std::invalid_argument("batch_size must be at least 2");
  std::vector<std::size_t> order = ds.split(split);
  if (order.empty()) throw std::invalid_argument("split " + to_string(split) + " is empty");
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  std::vector<TrainingBatch> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    if (end - start < 2) break;
    out.push_back(make_batch(
        ds, std::vector<std::size_t>(order.begin() + static_cast<long>(start),
                                     order.begin() + static_cast<long>(end)),
        source));
  }
  return out;
}

PairedDataset with_random_tiers(const PairedDataset& ds, std::uint64_t seed) {
  PairedDataset out = ds;
  for (std::size_t i = 0; i < out.utterances.size(); ++i) {
    auto& u = out.utterances[i];
    u.random_tiers = seg::random_nested_tiers(u.tiers, derive_seed(seed, i));
  }
  return out;
}

}  // namespace grupack::train
