// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "grupack/encoder/model.hpp"
#include "grupack/training/dataset.hpp"

namespace grupack::eval {

inline const std::vector<std::size_t> kDefaultKs{1, 5, 10};

/// Invariants: recalls[k] is the mean of hits_at[k]; hits are nested in k.
struct RetrievalReport {
  std::map<std::size_t, std::vector<std::uint8_t>> hits_at;
  std::map<std::size_t, double> recalls;
  std::vector<std::size_t> ranks;  // 1-based rank of each query's target
  std::size_t n_queries = 0;
  std::string condition_label;
};

/// Image indices by ascending cosine distance to `query`, ties by index.
std::vector<std::size_t> rank_images(std::span<const double> query, const num::Tensor& images);

/// Hit arrays and recalls. Throws when some k exceeds the candidate count.
RetrievalReport recall_at_k(const std::vector<std::size_t>& targets,
                            const std::vector<std::vector<std::size_t>>& rankings,
                            const std::vector<std::size_t>& ks = kDefaultKs);

/// Unit-norm embeddings of the given utterances, [n, embed_dim].
num::Tensor embed_utterances(const enc::SpeechEncoder& encoder,
                             const std::vector<const seg::Utterance*>& items,
                             enc::BoundarySource source, std::size_t batch_size = 64);

/// Unit-norm embeddings of image feature rows, [n, embed_dim].
num::Tensor embed_images(const enc::ImageParams& params, const num::Tensor& images);

/// Speech-to-image retrieval over one split: each caption in the split is a
/// query, the split's distinct images are the candidates. The ks above the
/// candidate count are left out.
RetrievalReport evaluate(const enc::Model& model, const train::PairedDataset& ds,
                         train::Split split, enc::BoundarySource source,
                         const std::string& label = "");

}  // namespace grupack::eval
