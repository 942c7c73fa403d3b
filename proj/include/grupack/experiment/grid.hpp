// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "grupack/encoder/model.hpp"
#include "grupack/evaluation/retrieval.hpp"
#include "grupack/experiment/keyvalue.hpp"
#include "grupack/synthcorpus/synth.hpp"
#include "grupack/training/train.hpp"

namespace grupack::exp {

/// Packager layers inserted into the base encoder. Several positions make a
/// hierarchical placement; levels are listed bottom-up.
struct Placement {
  std::vector<std::size_t> positions;  // 1-based layer indices, increasing
  std::vector<seg::Level> levels;
  enc::PackMode mode = enc::PackMode::keep;

  bool hierarchical() const { return positions.size() > 1; }
  /// "2:word:keep", "2,3:phone,word:keep"; parse() accepts the same form.
  std::string describe() const;
  /// Row label: "layer 2" or "layers 2,3 phone>word".
  std::string label() const;
  static Placement parse(const std::string& text);

  friend bool operator==(const Placement&, const Placement&) = default;
};

std::string to_string(enc::BoundarySource source);
enc::BoundarySource parse_source(const std::string& text);

/// Everything a config file can set. Keys (all optional):
///
///     seed, workers
///     corpus.path | corpus.{n_pairs, n_images, frame_dim, frames_per_phone,
///                          noise_sigma, caption_len, objects_per_image,
///                          image_dim, image_noise, seed}
///     encoder.{layers, hidden, conv, attention_dim}
///     train.{margin, lr, batch_size, epochs, eval_every, boundaries, placement}
///     grid.{baseline, repeats, positions, levels, modes, sources, placement}
///
/// grid.placement may repeat; the single-packager sweep is the product of
/// grid.positions x grid.levels x grid.modes.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::optional<std::string> corpus_path;
  synth::SynthSpec corpus;
  enc::EncoderConfig base = enc::EncoderConfig::desk();
  train::TrainConfig train;

  // Single-run settings used by the train verb.
  enc::BoundarySource train_source = enc::BoundarySource::true_tiers;
  std::optional<Placement> train_placement;

  bool baseline = true;
  std::size_t repeats = 1;
  std::vector<Placement> placements;
  std::vector<enc::BoundarySource> sources{enc::BoundarySource::true_tiers};
};

/// Throws enc::ConfigError on unknown keys or bad values.
ExperimentConfig parse_experiment(const KeyValueFile& kv);

/// Encoder config of a placement (the base when none).
enc::EncoderConfig cell_encoder(const ExperimentConfig& cfg, const std::optional<Placement>& p);

struct Cell {
  std::size_t index = 0;
  std::optional<Placement> placement;  // none: baseline
  enc::BoundarySource source = enc::BoundarySource::true_tiers;
  std::size_t repeat = 0;
  std::uint64_t seed = 0;

  /// Filesystem-safe identifier, e.g. "r0_L2-word-keep_true".
  std::string key() const;
};

/// Repeat-major order: per repeat, the baseline then placements x sources.
/// Cell seeds derive from (config seed, cell index).
std::vector<Cell> enumerate_cells(const ExperimentConfig& cfg);

struct CellResult {
  Cell cell;
  bool ok = false;
  std::string error;
  eval::RetrievalReport test;
  double best_val_r1 = 0.0;
  std::size_t best_epoch = 0;
  std::vector<train::EpochRecord> history;
  std::vector<std::size_t> mean_lengths;  // mean sequence length after each layer, test split
};

/// Synthetic corpus of one repeat, or the corpus directory when configured.
train::PairedDataset load_repeat_corpus(const ExperimentConfig& cfg, std::size_t repeat);

/// Trains and tests one cell. Errors are captured in the result, not thrown.
/// When `model_out` is given it receives the selected model.
CellResult run_cell(const ExperimentConfig& cfg, const Cell& cell, const train::PairedDataset& ds,
                    enc::Model* model_out = nullptr, std::ostream* log = nullptr);

struct TierCompression {
  std::size_t segments = 0;
  std::size_t frames = 0;
  double rate = 0.0;  // 100 * (1 - segments / frames)
};

/// Corpus-wide compression per tier, from exact popcounts.
std::map<seg::Level, TierCompression> corpus_compression(const train::PairedDataset& ds);

struct GridResult {
  std::vector<CellResult> cells;
  std::map<seg::Level, TierCompression> compression;  // repeat 0 corpus
};

/// Runs every cell, up to cfg.workers at a time. When `output_dir` is not
/// empty it writes report.txt, results.tsv, history.tsv and models/.
GridResult run_grid(const ExperimentConfig& cfg, const std::string& output_dir,
                    std::ostream* log = nullptr);

}  // namespace grupack::exp
