// SPDX-License-Identifier: Apache-2.0
#include "grupack/evaluation/embeddings_io.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "grupack/evaluation/retrieval.hpp"

namespace grupack::eval {

void write_embedding_rows(std::ostream& out, const std::vector<EmbeddingRow>& rows) {
  for (const auto& row : rows) {
    std::string line = row.kind + " " + row.id;
    for (double v : row.values) line += fmt::format(" {:.17g}", v);
    out << line << '\n';
  }
}

std::vector<EmbeddingRow> read_embedding_rows(std::istream& in) {
  std::vector<EmbeddingRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    EmbeddingRow row;
    if (!(ls >> row.kind >> row.id)) {
      throw std::runtime_error("embeddings line " + std::to_string(lineno) + ": malformed row");
    }
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        row.values.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw std::runtime_error("embeddings line " + std::to_string(lineno) +
                                 ": bad value '" + tok + "'");
      }
    }
    if (row.values.empty()) {
      throw std::runtime_error("embeddings line " + std::to_string(lineno) + ": no values");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<EmbeddingRow> read_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_embedding_rows(in);
}

std::vector<EmbeddingRow> compute_embeddings(const enc::Model& model,
                                             const train::PairedDataset& ds,
                                             enc::BoundarySource source) {
  std::vector<const seg::Utterance*> items;
  for (const auto& u : ds.utterances) items.push_back(&u);
  const num::Tensor utt = embed_utterances(model.speech, items, source);
  const num::Tensor img = embed_images(model.image, ds.images);
  std::vector<EmbeddingRow> rows;
  auto append = [&rows](const std::string& kind, const std::string& id, const num::Tensor& t,
                        std::size_t i) {
    const std::size_t e = t.dim(1);
    rows.push_back({kind, id, std::vector<double>(t.data() + i * e, t.data() + (i + 1) * e)});
  };
  for (std::size_t i = 0; i < items.size(); ++i) append("utterance", items[i]->id, utt, i);
  for (std::size_t i = 0; i < ds.image_ids.size(); ++i) append("image", ds.image_ids[i], img, i);
  return rows;
}

void export_embeddings(const enc::Model& model, const train::PairedDataset& ds,
                       const std::string& path, enc::BoundarySource source) {
  const auto rows = compute_embeddings(model, ds, source);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_embedding_rows(out, rows);
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace grupack::eval
