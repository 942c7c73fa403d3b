// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "grupack/encoder/model.hpp"
#include "grupack/training/dataset.hpp"

namespace grupack::eval {

/// One line of the embedding text format:
///
///     <kind> <id> <v_1> ... <v_e>
///
/// with values printed to 17 significant digits so they round-trip exactly.
struct EmbeddingRow {
  std::string kind;
  std::string id;
  std::vector<double> values;
};

void write_embedding_rows(std::ostream& out, const std::vector<EmbeddingRow>& rows);
std::vector<EmbeddingRow> read_embedding_rows(std::istream& in);
std::vector<EmbeddingRow> read_embeddings(const std::string& path);

/// Embeds every utterance ("utterance" rows) and image ("image" rows).
std::vector<EmbeddingRow> compute_embeddings(const enc::Model& model,
                                             const train::PairedDataset& ds,
                                             enc::BoundarySource source);

/// Writes compute_embeddings() to `path`; throws std::runtime_error on I/O.
void export_embeddings(const enc::Model& model, const train::PairedDataset& ds,
                       const std::string& path,
                       enc::BoundarySource source = enc::BoundarySource::true_tiers);

}  // namespace grupack::eval
