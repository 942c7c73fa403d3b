// SPDX-License-Identifier: Apache-2.0
#include "grupack/experiment/grid.hpp"

#include <fmt/format.h>
#include <omp.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>

#include "grupack/experiment/report.hpp"
#include "grupack/synthcorpus/corpus_io.hpp"

namespace grupack::exp {

using enc::BoundarySource;
using enc::ConfigError;

std::string to_string(BoundarySource source) {
  return source == BoundarySource::true_tiers ? "true" : "random";
}

BoundarySource parse_source(const std::string& text) {
  if (text == "true" || text == "TRUE") return BoundarySource::true_tiers;
  if (text == "random" || text == "RANDOM") return BoundarySource::random_tiers;
  throw ConfigError("unknown boundary source '" + text + "' (expected true or random)");
}

namespace {

enc::PackMode parse_mode(const std::string& text) {
  if (text == "all" || text == "ALL") return enc::PackMode::all;
  if (text == "keep" || text == "KEEP") return enc::PackMode::keep;
  throw ConfigError("unknown pack mode '" + text + "' (expected all or keep)");
}

seg::Level parse_level_or_throw(const std::string& text) {
  auto level = seg::parse_level(text);
  if (!level) throw ConfigError("unknown segment level '" + text + "'");
  return *level;
}

synth::Range parse_range(const std::string& key, const std::string& value) {
  const auto parts = split_list(value);
  if (parts.size() == 1) {
    const auto v = parse_size(key, parts[0]);
    return {v, v};
  }
  if (parts.size() != 2) throw ConfigError(key + ": expected 'lo,hi'");
  return {parse_size(key, parts[0]), parse_size(key, parts[1])};
}

}  // namespace

std::string Placement::describe() const {
  std::string pos, lev;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    pos += (i ? "," : "") + std::to_string(positions[i]);
    lev += (i ? "," : "") + seg::to_string(levels[i]);
  }
  return pos + ":" + lev + ":" + enc::to_string(mode);
}

std::string Placement::label() const {
  if (!hierarchical()) return "layer " + std::to_string(positions.front());
  std::string pos, lev;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    pos += (i ? "," : "") + std::to_string(positions[i]);
    lev += (i ? ">" : "") + seg::to_string(levels[i]);
  }
  return "layers " + pos + " " + lev;
}

Placement Placement::parse(const std::string& text) {
  const auto parts = split_list(text, ':');
  if (parts.size() != 3) {
    throw ConfigError("placement '" + text + "': expected <positions>:<levels>:<mode>");
  }
  Placement p;
  for (const auto& s : split_list(parts[0])) p.positions.push_back(parse_size("placement", s));
  for (const auto& s : split_list(parts[1])) p.levels.push_back(parse_level_or_throw(s));
  p.mode = parse_mode(parts[2]);
  if (p.positions.empty() || p.positions.size() != p.levels.size()) {
    throw ConfigError("placement '" + text + "': one level per position is required");
  }
  for (std::size_t i = 0; i < p.positions.size(); ++i) {
    if (p.positions[i] == 0) throw ConfigError("placement '" + text + "': positions are 1-based");
    if (i > 0 && p.positions[i] <= p.positions[i - 1]) {
      throw ConfigError("placement '" + text + "': positions must increase");
    }
  }
  return p;
}

ExperimentConfig parse_experiment(const KeyValueFile& kv) {
  static const std::set<std::string> known = {
      "seed", "workers", "corpus.path", "corpus.n_pairs", "corpus.n_images", "corpus.frame_dim",
      "corpus.frames_per_phone", "corpus.noise_sigma", "corpus.caption_len",
      "corpus.objects_per_image", "corpus.image_dim", "corpus.image_noise", "corpus.seed",
      "encoder.layers", "encoder.hidden", "encoder.conv", "encoder.attention_dim", "train.margin",
      "train.lr", "train.batch_size", "train.epochs", "train.eval_every", "train.boundaries",
      "train.placement", "grid.baseline", "grid.repeats", "grid.positions", "grid.levels",
      "grid.modes", "grid.sources", "grid.placement"};
  for (const auto& e : kv.entries) {
    if (!known.count(e.key)) {
      throw ConfigError(fmt::format("line {}: unknown key '{}'", e.line, e.key));
    }
  }
  ExperimentConfig cfg;
  auto get = [&](const std::string& key) { return kv.get(key); };
  if (auto v = get("seed")) cfg.seed = parse_size("seed", *v);
  if (auto v = get("workers")) cfg.workers = std::max<std::size_t>(1, parse_size("workers", *v));

  auto& c = cfg.corpus;
  c.seed = cfg.seed;
  if (auto v = get("corpus.path")) cfg.corpus_path = *v;
  if (auto v = get("corpus.n_pairs")) c.n_pairs = parse_size("corpus.n_pairs", *v);
  if (auto v = get("corpus.n_images")) c.n_images = parse_size("corpus.n_images", *v);
  if (auto v = get("corpus.frame_dim")) c.frame_dim = parse_size("corpus.frame_dim", *v);
  if (auto v = get("corpus.frames_per_phone"))
    c.frames_per_phone = parse_range("corpus.frames_per_phone", *v);
  if (auto v = get("corpus.noise_sigma")) c.noise_sigma = parse_double("corpus.noise_sigma", *v);
  if (auto v = get("corpus.caption_len")) c.caption_len = parse_range("corpus.caption_len", *v);
  if (auto v = get("corpus.objects_per_image"))
    c.objects_per_image = parse_range("corpus.objects_per_image", *v);
  if (auto v = get("corpus.image_dim")) c.image_dim = parse_size("corpus.image_dim", *v);
  if (auto v = get("corpus.image_noise")) c.image_noise = parse_double("corpus.image_noise", *v);
  if (auto v = get("corpus.seed")) c.seed = parse_size("corpus.seed", *v);
  if (!cfg.corpus_path) {
    try {
      synth::validate(c);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("corpus: ") + e.what());
    }
  }

  std::size_t n_layers = 5, hidden = 32;
  if (auto v = get("encoder.layers")) n_layers = parse_size("encoder.layers", *v);
  if (auto v = get("encoder.hidden")) hidden = parse_size("encoder.hidden", *v);
  cfg.base = enc::EncoderConfig::desk(n_layers, c.frame_dim, c.image_dim);
  for (auto& l : cfg.base.layers) l.hidden_dim = hidden;
  cfg.base.embed_dim = hidden;
  if (auto v = get("encoder.attention_dim"))
    cfg.base.attention_dim = parse_size("encoder.attention_dim", *v);
  if (auto v = get("encoder.conv")) {
    const auto parts = split_list(*v);
    if (parts.size() != 3) throw ConfigError("encoder.conv: expected 'filters,width,stride'");
    cfg.base.conv = {parse_size("encoder.conv", parts[0]), parse_size("encoder.conv", parts[1]),
                     parse_size("encoder.conv", parts[2])};
  }
  enc::validate(cfg.base);

  auto& t = cfg.train;
  t.seed = cfg.seed;
  if (auto v = get("train.margin")) t.margin_alpha = parse_double("train.margin", *v);
  if (auto v = get("train.lr")) t.lr = parse_double("train.lr", *v);
  if (auto v = get("train.batch_size")) t.batch_size = parse_size("train.batch_size", *v);
  if (auto v = get("train.epochs")) t.epochs = parse_size("train.epochs", *v);
  if (auto v = get("train.eval_every")) t.eval_every = parse_size("train.eval_every", *v);
  try {
    train::validate(t);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (auto v = get("train.boundaries")) cfg.train_source = parse_source(*v);
  if (auto v = get("train.placement")) {
    cfg.train_placement = Placement::parse(*v);
    cell_encoder(cfg, cfg.train_placement);
  }

  if (auto v = get("grid.baseline")) cfg.baseline = parse_bool("grid.baseline", *v);
  if (auto v = get("grid.repeats")) cfg.repeats = parse_size("grid.repeats", *v);
  if (cfg.repeats == 0) throw ConfigError("grid.repeats must be positive");
  if (auto v = get("grid.sources")) {
    cfg.sources.clear();
    for (const auto& s : split_list(*v)) cfg.sources.push_back(parse_source(s));
    if (cfg.sources.empty()) throw ConfigError("grid.sources is empty");
  }
  const auto positions = get("grid.positions");
  const auto levels = get("grid.levels");
  const auto modes = get("grid.modes");
  if (positions || levels || modes) {
    if (!positions || !levels) throw ConfigError("grid.positions and grid.levels go together");
    const auto mode_list = split_list(modes.value_or("keep"));
    for (const auto& m : mode_list)
      for (const auto& ps : split_list(*positions))
        for (const auto& ls : split_list(*levels))
          cfg.placements.push_back(Placement::parse(ps + ":" + ls + ":" + m));
  }
  for (const auto& e : kv.get_all("grid.placement")) {
    try {
      cfg.placements.push_back(Placement::parse(e.value));
    } catch (const ConfigError& err) {
      throw ConfigError(fmt::format("line {}: {}", e.line, err.what()));
    }
  }
  for (const auto& p : cfg.placements) cell_encoder(cfg, p);
  if (!cfg.baseline && cfg.placements.empty()) throw ConfigError("grid has no cells");
  return cfg;
}

enc::EncoderConfig cell_encoder(const ExperimentConfig& cfg, const std::optional<Placement>& p) {
  if (!p) return cfg.base;
  for (auto pos : p->positions) {
    if (pos > cfg.base.layers.size()) {
      throw ConfigError(fmt::format("placement {}: layer {} of a {}-layer encoder", p->describe(),
                                    pos, cfg.base.layers.size()));
    }
  }
  auto config = enc::with_packagers(cfg.base, p->positions, p->levels, p->mode);
  enc::validate(config);
  return config;
}

std::string Cell::key() const {
  std::string s = fmt::format("r{}_", repeat);
  if (!placement) return s + "baseline";
  std::string pos, lev;
  for (std::size_t i = 0; i < placement->positions.size(); ++i) {
    pos += (i ? "-" : "") + std::to_string(placement->positions[i]);
    lev += (i ? "-" : "") + seg::to_string(placement->levels[i]);
  }
  return s + fmt::format("L{}_{}_{}_{}", pos, lev, enc::to_string(placement->mode),
                         to_string(source));
}

std::vector<Cell> enumerate_cells(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  auto add = [&](std::optional<Placement> p, BoundarySource s, std::size_t r) {
    Cell c;
    c.index = cells.size();
    c.placement = std::move(p);
    c.source = s;
    c.repeat = r;
    c.seed = train::derive_seed(cfg.seed, c.index);
    cells.push_back(std::move(c));
  };
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    if (cfg.baseline) add(std::nullopt, BoundarySource::true_tiers, r);
    for (const auto& p : cfg.placements)
      for (auto s : cfg.sources) add(p, s, r);
  }
  return cells;
}

train::PairedDataset load_repeat_corpus(const ExperimentConfig& cfg, std::size_t repeat) {
  if (cfg.corpus_path) return synth::load_corpus(*cfg.corpus_path).dataset;
  synth::SynthSpec spec = cfg.corpus;
  if (repeat > 0) spec.seed = train::derive_seed(cfg.corpus.seed, repeat);
  return synth::generate(spec);
}

CellResult run_cell(const ExperimentConfig& cfg, const Cell& cell, const train::PairedDataset& ds,
                    enc::Model* model_out, std::ostream* log) {
  CellResult res;
  res.cell = cell;
  try {
    const auto config = cell_encoder(cfg, cell.placement);
    train::TrainConfig tc = cfg.train;
    tc.seed = cell.seed;
    // Random tiers are drawn here so training and testing see the same ones.
    std::optional<train::PairedDataset> shuffled;
    if (cell.source == BoundarySource::random_tiers) {
      shuffled = train::with_random_tiers(ds, train::random_tier_seed(tc.seed));
    }
    const auto& data = shuffled ? *shuffled : ds;
    const auto init = enc::Model::init(config, train::derive_seed(cell.seed, 1));
    const auto start = std::chrono::steady_clock::now();
    auto trained = train::train(init, data, tc, cell.source);
    res.history = trained.history;
    res.best_epoch = trained.best_epoch;
    res.best_val_r1 = trained.best_val_r1;
    res.test = eval::evaluate(trained.best, data, train::Split::test, cell.source, cell.key());

    // Mean per-layer sequence lengths over the test utterances.
    {
      num::NoGradGuard no_grad;
      std::vector<const seg::Utterance*> items;
      for (auto p : data.test) items.push_back(&data.utterances[data.pairs[p].utterance]);
      enc::EncodeTrace trace;
      enc::encode_utterance(trained.best.speech, enc::make_sequence_batch(items, cell.source),
                            &trace);
      for (const auto& lens : trace.lengths_after_layer) {
        std::size_t total = 0;
        for (auto l : lens) total += l;
        res.mean_lengths.push_back(total / std::max<std::size_t>(1, lens.size()));
      }
    }
    if (model_out) *model_out = trained.best.clone();
    res.ok = true;
    if (log) {
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const std::string line =
          fmt::format("cell {} {}: test R@1 {:.3f}, best epoch {}, {:.1f}s\n", cell.index,
                      cell.key(), res.test.recalls.at(1), res.best_epoch, secs);
#pragma omp critical(grupack_log)
      *log << line << std::flush;
    }
  } catch (const std::exception& e) {
    res.ok = false;
    res.error = e.what();
    if (log) {
      const std::string line = fmt::format("cell {} {} failed: {}\n", cell.index, cell.key(), e.what());
#pragma omp critical(grupack_log)
      *log << line << std::flush;
    }
  }
  return res;
}

std::map<seg::Level, TierCompression> corpus_compression(const train::PairedDataset& ds) {
  std::map<seg::Level, TierCompression> out;
  for (const auto& u : ds.utterances) {
    for (const auto& [level, b] : u.tiers) {
      out[level].segments += b.popcount();
      out[level].frames += b.length();
    }
  }
  for (auto& [level, c] : out) {
    c.rate = c.frames ? 100.0 * (1.0 - static_cast<double>(c.segments) / static_cast<double>(c.frames))
                      : 0.0;
  }
  return out;
}

namespace {

void write_outputs(const GridResult& result, const std::vector<enc::Model>& models,
                   const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "models");
  auto open = [&](const std::string& name) {
    std::ofstream os(fs::path(dir) / name);
    if (!os) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
    return os;
  };
  open("report.txt") << render_report(result);
  auto tsv = open("results.tsv");
  tsv << "cell\tkey\tstatus\tval_r1\tbest_epoch\tr1\tr5\tr10\tn_queries\tlengths\terror\n";
  auto hist = open("history.tsv");
  hist << "cell\tkey\tepoch\ttrain_loss\tval_r1\n";
  for (std::size_t i = 0; i < result.cells.size(); ++i) {
    const auto& c = result.cells[i];
    auto recall = [&](std::size_t k) {
      auto it = c.test.recalls.find(k);
      return it == c.test.recalls.end() ? std::string("-") : fmt::format("{:.6f}", it->second);
    };
    std::string lengths;
    for (std::size_t l = 0; l < c.mean_lengths.size(); ++l)
      lengths += (l ? "," : "") + std::to_string(c.mean_lengths[l]);
    tsv << fmt::format("{}\t{}\t{}\t{:.6f}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", c.cell.index,
                       c.cell.key(), c.ok ? "ok" : "failed", c.best_val_r1, c.best_epoch,
                       recall(1), recall(5), recall(10), c.test.n_queries,
                       lengths.empty() ? "-" : lengths, c.error.empty() ? "-" : c.error);
    for (const auto& h : c.history) {
      hist << fmt::format("{}\t{}\t{}\t{:.17g}\t{}\n", c.cell.index, c.cell.key(), h.epoch,
                          h.train_loss, h.val_r1 ? fmt::format("{:.6f}", *h.val_r1) : "-");
    }
    if (c.ok) enc::save_model(models[i], (fs::path(dir) / "models" / (c.cell.key() + ".model")).string());
  }
}

}  // namespace

GridResult run_grid(const ExperimentConfig& cfg, const std::string& output_dir,
                    std::ostream* log) {
  const auto cells = enumerate_cells(cfg);
  std::vector<train::PairedDataset> corpora;
  for (std::size_t r = 0; r < cfg.repeats; ++r) corpora.push_back(load_repeat_corpus(cfg, r));

  GridResult result;
  result.compression = corpus_compression(corpora.front());
  result.cells.resize(cells.size());
  std::vector<enc::Model> models(cells.size());
  const bool keep_models = !output_dir.empty();
  const int workers = static_cast<int>(std::min(cfg.workers, std::max<std::size_t>(1, cells.size())));
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (std::size_t i = 0; i < cells.size(); ++i) {
    result.cells[i] = run_cell(cfg, cells[i], corpora[cells[i].repeat],
                               keep_models ? &models[i] : nullptr, log);
  }
  if (keep_models) write_outputs(result, models, output_dir);
  return result;
}

}  // namespace grupack::exp
