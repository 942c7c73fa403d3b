// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <set>

#include "grupack/synthcorpus/corpus_io.hpp"
#include "grupack/synthcorpus/synth.hpp"

using namespace grupack;
using seg::Level;

TEST_CASE("default corpus: tiers nest, word counts match, generation is fast") {
  synth::SynthSpec spec;
  const auto start = std::chrono::steady_clock::now();
  const auto corpus = synth::generate_corpus(spec);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(secs < 5.0);
  const auto& ds = corpus.dataset;
  CHECK(ds.utterances.size() == 1000);
  CHECK(ds.image_ids.size() == 200);
  std::size_t bytes = 0;
  for (std::size_t i = 0; i < ds.utterances.size(); ++i) {
    const auto& u = ds.utterances[i];
    CHECK_NOTHROW(seg::validate_tiers(u.tiers, u.length()));
    CHECK(u.tiers.at(Level::word).popcount() == corpus.alignments[i].words.size());
    CHECK(u.tiers.at(Level::phone).popcount() == corpus.alignments[i].phones.size());
    bytes += u.frames.size() * sizeof(double);
  }
  CHECK(bytes < 100u * 1024 * 1024);
}

TEST_CASE("connected syllables cross word boundaries somewhere") {
  const auto ds = synth::generate(synth::SynthSpec{});
  std::size_t differing = 0;
  for (const auto& u : ds.utterances) {
    differing += u.tiers.at(Level::syllable_connected).bits != u.tiers.at(Level::syllable_word).bits;
    CHECK(u.tiers.at(Level::syllable_connected).popcount() ==
          u.tiers.at(Level::syllable_word).popcount());
  }
  CHECK(differing > 100);
}

TEST_CASE("regeneration with the same seed is identical") {
  synth::SynthSpec spec;
  spec.n_pairs = 60;
  spec.n_images = 12;
  const auto a = synth::generate(spec), b = synth::generate(spec);
  for (std::size_t i = 0; i < a.utterances.size(); ++i) {
    CHECK(std::equal(a.utterances[i].frames.values().begin(), a.utterances[i].frames.values().end(),
                     b.utterances[i].frames.values().begin(), b.utterances[i].frames.values().end()));
  }
  CHECK(std::equal(a.images.values().begin(), a.images.values().end(), b.images.values().begin()));
  CHECK(a.train == b.train);
  spec.seed = 2;
  const auto c = synth::generate(spec);
  CHECK_FALSE(std::equal(a.images.values().begin(), a.images.values().end(),
                         c.images.values().begin()));
}

TEST_CASE("zero noise: frames of one phone are identical") {
  synth::SynthSpec spec;
  spec.n_pairs = 20;
  spec.n_images = 4;
  spec.noise_sigma = 0.0;
  const auto corpus = synth::generate_corpus(spec);
  std::map<std::string, std::vector<double>> seen;
  for (std::size_t i = 0; i < corpus.alignments.size(); ++i) {
    const auto& a = corpus.alignments[i];
    const auto& f = corpus.dataset.utterances[i].frames;
    for (const auto& p : a.phones) {
      for (long t = p.start_ms / a.hop_ms; t < p.end_ms / a.hop_ms; ++t) {
        std::vector<double> row(f.data() + t * f.dim(1), f.data() + (t + 1) * f.dim(1));
        auto [it, fresh] = seen.emplace(p.label, row);
        if (!fresh) CHECK(it->second == row);
      }
    }
  }
}

TEST_CASE("images are unit-norm and splits follow images 80/10/10") {
  const auto ds = synth::generate(synth::SynthSpec{});
  for (std::size_t i = 0; i < ds.image_ids.size(); ++i) {
    double ss = 0.0;
    for (std::size_t j = 0; j < ds.image_dim(); ++j) ss += ds.images.at(i, j) * ds.images.at(i, j);
    CHECK(std::abs(std::sqrt(ss) - 1.0) < 1e-12);
  }
  CHECK(ds.train.size() == 800);
  CHECK(ds.val.size() == 100);
  CHECK(ds.test.size() == 100);
  std::set<std::size_t> train_images, test_images;
  for (auto p : ds.train) train_images.insert(ds.pairs[p].image);
  for (auto p : ds.test) test_images.insert(ds.pairs[p].image);
  for (auto i : test_images) CHECK(train_images.count(i) == 0);
  CHECK_NOTHROW(train::validate(ds));
}

TEST_CASE("spec validation") {
  synth::SynthSpec spec;
  spec.frames_per_phone = {1, 3};
  CHECK_THROWS(synth::validate(spec));
  spec = {};
  spec.noise_sigma = -1.0;
  CHECK_THROWS(synth::validate(spec));
  spec = {};
  spec.caption_len = {3, 40};
  CHECK_THROWS_WITH(synth::validate(spec), "vocabulary too small for caption_len");
  spec = {};
  spec.vocab.push_back({"empty", {}, false});
  CHECK_THROWS(synth::validate(spec));
}

TEST_CASE("corpus directory round-trip") {
  synth::SynthSpec spec;
  spec.n_pairs = 30;
  spec.n_images = 6;
  const auto corpus = synth::generate_corpus(spec);
  const auto dir = (std::filesystem::temp_directory_path() / "grupack_corpus_test").string();
  std::filesystem::remove_all(dir);
  synth::save_corpus(corpus, dir);
  const auto loaded = synth::load_corpus(dir);
  const auto& a = corpus.dataset;
  const auto& b = loaded.dataset;
  REQUIRE(a.utterances.size() == b.utterances.size());
  for (std::size_t i = 0; i < a.utterances.size(); ++i) {
    CHECK(a.utterances[i].id == b.utterances[i].id);
    CHECK(std::equal(a.utterances[i].frames.values().begin(), a.utterances[i].frames.values().end(),
                     b.utterances[i].frames.values().begin()));
    for (auto level : seg::kAllLevels)
      CHECK(a.utterances[i].tiers.at(level).bits == b.utterances[i].tiers.at(level).bits);
  }
  CHECK(a.image_ids == b.image_ids);
  CHECK(std::equal(a.images.values().begin(), a.images.values().end(), b.images.values().begin()));
  CHECK(a.train == b.train);
  CHECK(a.val == b.val);
  CHECK(a.test == b.test);
  std::filesystem::remove(std::filesystem::path(dir) / "pairs.txt");
  CHECK_THROWS_WITH(synth::load_corpus(dir), doctest::Contains("pairs.txt"));
  std::filesystem::remove_all(dir);
}
