// SPDX-License-Identifier: Apache-2.0
#include "grupack/evaluation/retrieval.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace grupack::eval {

std::vector<std::size_t> rank_images(std::span<const double> query, const num::Tensor& images) {
  if (images.rank() != 2) throw num::DimensionError("rank_images: images must be a matrix");
  const std::size_t n = images.dim(0), e = images.dim(1);
  if (query.size() != e) {
    throw num::DimensionError("rank_images: query width " + std::to_string(query.size()) +
                              " vs image width " + std::to_string(e));
  }
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < e; ++j) dot += query[j] * images.at(i, j);
    dist[i] = 1.0 - dot;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
  return order;
}

RetrievalReport recall_at_k(const std::vector<std::size_t>& targets,
                            const std::vector<std::vector<std::size_t>>& rankings,
                            const std::vector<std::size_t>& ks) {
  if (targets.size() != rankings.size()) {
    throw std::invalid_argument("recall_at_k: one ranking per query is required");
  }
  if (targets.empty()) throw std::invalid_argument("recall_at_k: no queries");
  RetrievalReport r;
  r.n_queries = targets.size();
  r.ranks.resize(targets.size());
  for (std::size_t q = 0; q < targets.size(); ++q) {
    const auto& ranking = rankings[q];
    for (auto k : ks) {
      if (k == 0 || k > ranking.size()) {
        throw std::invalid_argument("recall_at_k: k=" + std::to_string(k) + " with " +
                                    std::to_string(ranking.size()) + " candidates");
      }
    }
    auto it = std::find(ranking.begin(), ranking.end(), targets[q]);
    if (it == ranking.end()) throw std::invalid_argument("recall_at_k: target missing from ranking");
    r.ranks[q] = static_cast<std::size_t>(it - ranking.begin()) + 1;
  }
  for (auto k : ks) {
    auto& hits = r.hits_at[k];
    hits.resize(targets.size());
    std::size_t count = 0;
    for (std::size_t q = 0; q < targets.size(); ++q) {
      hits[q] = r.ranks[q] <= k ? 1 : 0;
      count += hits[q];
    }
    r.recalls[k] = static_cast<double>(count) / static_cast<double>(targets.size());
  }
  return r;
}

num::Tensor embed_utterances(const enc::SpeechEncoder& encoder,
                             const std::vector<const seg::Utterance*>& items,
                             enc::BoundarySource source, std::size_t batch_size) {
  if (items.empty()) throw std::invalid_argument("embed_utterances: no utterances");
  num::NoGradGuard no_grad;
  const std::size_t e = encoder.config.embed_dim;
  num::Tensor out({items.size(), e});
  for (std::size_t start = 0; start < items.size(); start += batch_size) {
    const std::size_t end = std::min(items.size(), start + batch_size);
    std::vector<const seg::Utterance*> chunk(items.begin() + static_cast<long>(start),
                                             items.begin() + static_cast<long>(end));
    auto batch = enc::make_sequence_batch(chunk, source);
    num::Var emb = enc::encode_utterance(encoder, batch);
    std::copy_n(emb.value().data(), (end - start) * e, out.data() + start * e);
  }
  return out;
}

num::Tensor embed_images(const enc::ImageParams& params, const num::Tensor& images) {
  num::NoGradGuard no_grad;
  return enc::encode_image(num::constant(images.values_only()), params).value().values_only();
}

RetrievalReport evaluate(const enc::Model& model, const train::PairedDataset& ds,
                         train::Split split, enc::BoundarySource source,
                         const std::string& label) {
  const auto& pair_ids = ds.split(split);
  if (pair_ids.empty()) {
    throw std::invalid_argument("evaluate: split " + train::to_string(split) + " is empty");
  }
  std::vector<std::size_t> image_ids;
  std::vector<const seg::Utterance*> queries;
  for (auto pi : pair_ids) {
    image_ids.push_back(ds.pairs[pi].image);
    queries.push_back(&ds.utterances[ds.pairs[pi].utterance]);
  }
  std::sort(image_ids.begin(), image_ids.end());
  image_ids.erase(std::unique(image_ids.begin(), image_ids.end()), image_ids.end());

  const std::size_t dim = ds.image_dim();
  num::Tensor candidates({image_ids.size(), dim});
  for (std::size_t c = 0; c < image_ids.size(); ++c) {
    std::copy_n(ds.images.data() + image_ids[c] * dim, dim, candidates.data() + c * dim);
  }
  const num::Tensor img = embed_images(model.image, candidates);
  const num::Tensor utt = embed_utterances(model.speech, queries, source);

  std::vector<std::size_t> targets;
  std::vector<std::vector<std::size_t>> rankings;
  const std::size_t e = utt.dim(1);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto img_id = ds.pairs[pair_ids[q]].image;
    targets.push_back(static_cast<std::size_t>(
        std::lower_bound(image_ids.begin(), image_ids.end(), img_id) - image_ids.begin()));
    rankings.push_back(rank_images(std::span<const double>(utt.data() + q * e, e), img));
  }
  std::vector<std::size_t> ks;
  for (auto k : kDefaultKs)
    if (k <= image_ids.size()) ks.push_back(k);
  auto report = recall_at_k(targets, rankings, ks);
  report.condition_label = label;
  return report;
}

}  // namespace grupack::eval
