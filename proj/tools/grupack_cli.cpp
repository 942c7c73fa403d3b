// SPDX-License-Identifier: Apache-2.0
// Command-line front end: corpus generation, single runs, grids, evaluation
// and embedding export. Exit codes: 0 success, 1 failed run or cell, 2 bad
// configuration or arguments.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "grupack/evaluation/embeddings_io.hpp"
#include "grupack/experiment/grid.hpp"
#include "grupack/experiment/report.hpp"
#include "grupack/synthcorpus/corpus_io.hpp"

namespace {

using namespace grupack;

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> workers;
  std::string model;
  std::string boundaries;
};

exp::ExperimentConfig load_config(const Options& o) {
  exp::KeyValueFile kv;
  if (!o.config.empty()) kv = exp::read_key_value(o.config);
  if (o.seed) kv.set("seed", std::to_string(*o.seed));
  if (o.workers) kv.set("workers", std::to_string(*o.workers));
  if (!o.boundaries.empty()) kv.set("train.boundaries", o.boundaries);
  return exp::parse_experiment(kv);
}

int cmd_gen(const Options& o) {
  auto cfg = load_config(o);
  if (cfg.corpus_path) throw enc::ConfigError("gen: corpus.path is set; nothing to generate");
  const auto corpus = synth::generate_corpus(cfg.corpus);
  synth::save_corpus(corpus, o.out);
  fmt::print("wrote {} utterances, {} images to {}\n", corpus.dataset.utterances.size(),
             corpus.dataset.image_ids.size(), o.out);
  return 0;
}

int cmd_train(const Options& o) {
  auto cfg = load_config(o);
  const auto ds = exp::load_repeat_corpus(cfg, 0);
  exp::Cell cell;
  cell.placement = cfg.train_placement;
  cell.source = cfg.train_placement ? cfg.train_source : enc::BoundarySource::true_tiers;
  cell.seed = train::derive_seed(cfg.seed, 0);
  enc::Model model;
  const auto res = exp::run_cell(cfg, cell, ds, &model, &std::cerr);
  if (!res.ok) {
    fmt::print(stderr, "training failed: {}\n", res.error);
    return kExitFailure;
  }
  std::filesystem::create_directories(o.out);
  const auto dir = std::filesystem::path(o.out);
  enc::save_model(model, (dir / "model.txt").string());
  std::ofstream hist(dir / "history.tsv");
  hist << "epoch\ttrain_loss\tval_r1\n";
  for (const auto& h : res.history) {
    hist << fmt::format("{}\t{:.17g}\t{}\n", h.epoch, h.train_loss,
                        h.val_r1 ? fmt::format("{:.6f}", *h.val_r1) : "-");
  }
  std::string summary = fmt::format("{}\nselected epoch {} (validation R@1 {:.3f})\n",
                                    enc::describe(model.speech.config), res.best_epoch,
                                    res.best_val_r1);
  for (const auto& [k, r] : res.test.recalls) summary += fmt::format("test R@{} {:.4f}\n", k, r);
  std::ofstream(dir / "report.txt") << summary;
  fmt::print("{}", summary);
  return 0;
}

int cmd_grid(const Options& o) {
  auto cfg = load_config(o);
  const auto result = exp::run_grid(cfg, o.out, &std::cerr);
  fmt::print("{}", exp::render_report(result));
  for (const auto& c : result.cells)
    if (!c.ok) return kExitFailure;
  return 0;
}

int cmd_eval(const Options& o) {
  auto cfg = load_config(o);
  auto ds = exp::load_repeat_corpus(cfg, 0);
  const auto model = enc::load_model(o.model);
  if (cfg.train_source == enc::BoundarySource::random_tiers) {
    ds = train::with_random_tiers(ds, train::random_tier_seed(train::derive_seed(cfg.seed, 0)));
  }
  const auto report = eval::evaluate(model, ds, train::Split::test, cfg.train_source);
  for (const auto& [k, r] : report.recalls) fmt::print("test R@{} {:.4f}\n", k, r);
  fmt::print("queries {}\n", report.n_queries);
  return 0;
}

int cmd_export(const Options& o) {
  auto cfg = load_config(o);
  const auto ds = exp::load_repeat_corpus(cfg, 0);
  const auto model = enc::load_model(o.model);
  eval::export_embeddings(model, ds, o.out);
  fmt::print("wrote {} rows to {}\n", ds.utterances.size() + ds.image_ids.size(), o.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary-aware recurrent speech-image retrieval experiments"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool needs_out) {
    sub->add_option("--config", o.config, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) { o.seed = s; }, "override the config seed");
    auto* out = sub->add_option("--out", o.out, "output path");
    if (needs_out) out->required();
  };
  auto* gen = app.add_subcommand("gen", "synthesize a corpus directory");
  add_common(gen, true);
  auto* tr = app.add_subcommand("train", "train one model (train.placement, train.boundaries)");
  add_common(tr, true);
  auto* grid = app.add_subcommand("grid", "run the full sweep and write report tables");
  add_common(grid, false);
  grid->add_option_function<std::size_t>(
      "--workers", [&](const std::size_t& w) { o.workers = w; }, "cells trained concurrently");
  auto* ev = app.add_subcommand("eval", "test-split recall of a saved model");
  add_common(ev, false);
  ev->add_option("--model", o.model, "model file")->required()->check(CLI::ExistingFile);
  ev->add_option("--boundaries", o.boundaries, "true or random");
  auto* ex = app.add_subcommand("export-emb", "write utterance and image embeddings");
  add_common(ex, true);
  ex->add_option("--model", o.model, "model file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) return cmd_gen(o);
    if (*tr) return cmd_train(o);
    if (*grid) return cmd_grid(o);
    if (*ev) return cmd_eval(o);
    if (*ex) return cmd_export(o);
  } catch (const enc::ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
