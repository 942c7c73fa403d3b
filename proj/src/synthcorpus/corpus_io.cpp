// SPDX-License-Identifier: Apache-2.0
#include "grupack/synthcorpus/corpus_io.hpp"

#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "grupack/evaluation/embeddings_io.hpp"
#include "grupack/segmentation/utterance.hpp"

namespace grupack::synth {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::string& dir) {
  const auto& ds = corpus.dataset;
  if (corpus.alignments.size() != ds.utterances.size()) {
    throw std::invalid_argument("save_corpus: one alignment per utterance is required");
  }
  const fs::path root(dir);
  fs::create_directories(root / "alignments");
  for (const auto& a : corpus.alignments) {
    auto os = open_out(root / "alignments" / (a.id + ".ali"));
    os << format_alignment(a);
  }
  {
    auto os = open_out(root / "features.txt");
    for (const auto& u : ds.utterances) {
      const std::size_t T = u.frames.dim(0), d = u.frames.dim(1);
      os << u.id << ' ' << T << ' ' << d << '\n';
      for (std::size_t t = 0; t < T; ++t) {
        std::string line;
        for (std::size_t j = 0; j < d; ++j) {
          if (j) line += ' ';
          line += fmt::format("{:.17g}", u.frames.at(t, j));
        }
        os << line << '\n';
      }
    }
  }
  {
    auto os = open_out(root / "images.txt");
    std::vector<eval::EmbeddingRow> rows;
    const std::size_t e = ds.image_dim();
    for (std::size_t i = 0; i < ds.image_ids.size(); ++i) {
      rows.push_back({"image", ds.image_ids[i],
                      std::vector<double>(ds.images.data() + i * e, ds.images.data() + (i + 1) * e)});
    }
    eval::write_embedding_rows(os, rows);
  }
  {
    std::vector<std::string> split(ds.pairs.size(), "none");
    for (auto p : ds.train) split[p] = "train";
    for (auto p : ds.val) split[p] = "val";
    for (auto p : ds.test) split[p] = "test";
    auto os = open_out(root / "pairs.txt");
    for (std::size_t p = 0; p < ds.pairs.size(); ++p) {
      os << ds.utterances[ds.pairs[p].utterance].id << ' ' << ds.image_ids[ds.pairs[p].image]
         << ' ' << split[p] << '\n';
    }
  }
}

Corpus load_corpus(const std::string& dir) {
  const fs::path root(dir);
  Corpus corpus;
  auto& ds = corpus.dataset;
  const seg::Phonology ph = seg::Phonology::english();

  const fs::path feat_path = root / "features.txt";
  std::istringstream feats(read_file(feat_path));
  std::map<std::string, std::size_t> utt_index;
  std::string id;
  std::size_t T = 0, d = 0;
  while (feats >> id >> T >> d) {
    if (T == 0 || d == 0) throw std::runtime_error(feat_path.string() + ": empty block for " + id);
    const fs::path ali_path = root / "alignments" / (id + ".ali");
    seg::Alignment a;
    try {
      a = seg::parse_alignment(read_file(ali_path));
    } catch (const std::exception& e) {
      throw std::runtime_error(ali_path.string() + ": " + e.what());
    }
    if (a.frames != T) {
      throw std::runtime_error(fmt::format("{}: {} has {} frames but its alignment covers {}",
                                           feat_path.string(), id, T, a.frames));
    }
    seg::Utterance u;
    u.id = id;
    u.frames = num::Tensor({T, d});
    for (std::size_t i = 0; i < T * d; ++i) {
      if (!(feats >> u.frames[i])) {
        throw std::runtime_error(feat_path.string() + ": truncated block for " + id);
      }
    }
    u.tiers = seg::build_tiers(a, ph);
    if (!utt_index.emplace(id, ds.utterances.size()).second) {
      throw std::runtime_error(feat_path.string() + ": duplicate utterance " + id);
    }
    ds.utterances.push_back(std::move(u));
    corpus.alignments.push_back(std::move(a));
  }
  if (!feats.eof()) throw std::runtime_error(feat_path.string() + ": malformed block header");
  if (ds.utterances.empty()) throw std::runtime_error(feat_path.string() + ": no utterances");

  const auto rows = eval::read_embeddings((root / "images.txt").string());
  if (rows.empty()) throw std::runtime_error("images.txt: no images");
  const std::size_t e = rows.front().values.size();
  ds.images = num::Tensor({rows.size(), e});
  std::map<std::string, std::size_t> img_index;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].values.size() != e) throw std::runtime_error("images.txt: ragged image rows");
    ds.image_ids.push_back(rows[i].id);
    img_index[rows[i].id] = i;
    std::copy(rows[i].values.begin(), rows[i].values.end(), ds.images.data() + i * e);
  }

  std::istringstream pairs(read_file(root / "pairs.txt"));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(pairs, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string u, img, split;
    if (!(ls >> u >> img >> split)) {
      throw std::runtime_error(fmt::format("pairs.txt line {}: malformed", lineno));
    }
    if (!utt_index.count(u) || !img_index.count(img)) {
      throw std::runtime_error(fmt::format("pairs.txt line {}: unknown id", lineno));
    }
    const std::size_t p = ds.pairs.size();
    ds.pairs.push_back({utt_index[u], img_index[img]});
    if (split == "train") ds.train.push_back(p);
    else if (split == "val") ds.val.push_back(p);
    else if (split == "test") ds.test.push_back(p);
    else if (split != "none")
      throw std::runtime_error(fmt::format("pairs.txt line {}: unknown split '{}'", lineno, split));
  }
  train::validate(ds);
  return corpus;
}

}  // namespace grupack::synth
