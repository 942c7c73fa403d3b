// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "grupack/numerics/grad_check.hpp"
#include "grupack/synthcorpus/synth.hpp"
#include "grupack/training/loss.hpp"
#include "grupack/training/train.hpp"

using namespace grupack;

namespace {

num::Tensor unit_rows(std::size_t n, std::size_t e, std::mt19937_64& rng) {
  num::Tensor t({n, e});
  std::normal_distribution<double> normal;
  for (std::size_t i = 0; i < n; ++i) {
    double ss = 0.0;
    for (std::size_t j = 0; j < e; ++j) ss += (t.at(i, j) = normal(rng)) * t.at(i, j);
    for (std::size_t j = 0; j < e; ++j) t.at(i, j) /= std::sqrt(ss);
  }
  return t;
}

double loss_of(const num::Tensor& u, const num::Tensor& i, double alpha = 0.2) {
  return train::contrastive_loss(num::constant(u), num::constant(i), alpha).value()[0];
}

// Smallest |hinge argument| over all terms; used to keep finite differences off kinks.
double min_hinge_gap(const num::Tensor& u, const num::Tensor& im, double alpha) {
  const std::size_t B = u.dim(0), e = u.dim(1);
  auto dot = [&](std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t j = 0; j < e; ++j) s += u.at(a, j) * im.at(b, j);
    return s;
  };
  double gap = 1e9;
  for (std::size_t p = 0; p < B; ++p)
    for (std::size_t q = 0; q < B; ++q) {
      if (p == q) continue;
      gap = std::min(gap, std::abs(alpha - dot(p, p) + dot(q, p)));
      gap = std::min(gap, std::abs(alpha - dot(p, p) + dot(p, q)));
    }
  return gap;
}

synth::SynthSpec small_spec(std::size_t pairs = 50) {
  synth::SynthSpec s;
  s.n_pairs = pairs;
  s.n_images = pairs / 5;
  s.seed = 4;
  return s;
}

enc::EncoderConfig small_encoder() { return enc::EncoderConfig::desk(2, 13, 32); }

}  // namespace

TEST_CASE("contrastive loss hand-evaluated cases") {
  CHECK(loss_of(num::Tensor::matrix(1, 2, {1, 0}), num::Tensor::matrix(1, 2, {0, 1})) == 0.0);
  const auto id = num::Tensor::identity(2);
  CHECK(loss_of(id, id) == 0.0);
  const auto same = num::Tensor::matrix(2, 2, {1, 0, 1, 0});
  CHECK(loss_of(same, same) == doctest::Approx(0.8));
}

TEST_CASE("contrastive loss rejects rows that are not unit-norm") {
  const auto u = num::Tensor::matrix(2, 2, {1, 0, 0.5, 0});
  CHECK_THROWS(loss_of(u, num::Tensor::identity(2)));
  CHECK_THROWS(loss_of(num::Tensor::identity(2), u));
}

TEST_CASE("contrastive loss is non-negative and permutation-equivariant") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto u = unit_rows(5, 3, rng), im = unit_rows(5, 3, rng);
    const double l = loss_of(u, im);
    CHECK(l >= 0.0);
    std::vector<std::size_t> perm{3, 0, 4, 1, 2};
    num::Tensor pu({5, 3}), pi({5, 3});
    for (std::size_t r = 0; r < 5; ++r)
      for (std::size_t j = 0; j < 3; ++j) {
        pu.at(r, j) = u.at(perm[r], j);
        pi.at(r, j) = im.at(perm[r], j);
      }
    CHECK(loss_of(pu, pi) == doctest::Approx(l).epsilon(1e-12));
  }
}

TEST_CASE("contrastive loss gradient matches finite differences away from kinks") {
  std::mt19937_64 rng(2);
  int checked = 0;
  while (checked < 30) {
    const auto u0 = unit_rows(4, 3, rng), i0 = unit_rows(4, 3, rng);
    if (min_hinge_gap(u0, i0, 0.2) < 1e-3) continue;
    // Raw parameters normalised inside f, so perturbations stay unit-norm.
    auto u = num::parameter(u0), im = num::parameter(i0);
    auto f = [&] {
      return train::contrastive_loss(num::l2_normalize_rows(u), num::l2_normalize_rows(im), 0.2);
    };
    CHECK(num::grad_check(f, {u, im}) < 1e-4);
    ++checked;
  }
}

TEST_CASE("make_batches sizes and determinism") {
  auto ds = synth::generate(small_spec(50));
  ds.train.resize(10);
  auto sizes = [](const std::vector<train::TrainingBatch>& bs) {
    std::vector<std::size_t> s;
    for (const auto& b : bs) s.push_back(b.pair_indices.size());
    return s;
  };
  CHECK(sizes(train::make_batches(ds, train::Split::train, 4, 1)) ==
        std::vector<std::size_t>{4, 4, 2});
  ds.train.resize(5);
  CHECK(sizes(train::make_batches(ds, train::Split::train, 4, 1)) == std::vector<std::size_t>{4});
  const auto a = train::make_batches(ds, train::Split::train, 2, 7);
  const auto b = train::make_batches(ds, train::Split::train, 2, 7);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].pair_indices == b[i].pair_indices);
  const auto& batch = a.front();
  CHECK(batch.images.dim(0) == 2);
  CHECK_NOTHROW(enc::validate(batch.speech));
  CHECK(batch.speech.tiers.count(seg::Level::word) == 1);
}

TEST_CASE("train with lr 0 leaves parameters unchanged") {
  const auto ds = synth::generate(small_spec(50));
  const auto init = enc::Model::init(small_encoder(), 1);
  train::TrainConfig tc;
  tc.lr = 0.0;
  tc.epochs = 1;
  tc.batch_size = 8;
  const auto res = train::train(init, ds, tc);
  const auto a = init.parameters(), b = res.best.parameters();
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(std::equal(a[i].value().values().begin(), a[i].value().values().end(),
                     b[i].value().values().begin()));
}

TEST_CASE("training lowers the loss and is deterministic") {
  const auto ds = synth::generate(small_spec(50));
  const auto init = enc::Model::init(small_encoder(), 2);
  train::TrainConfig tc;
  tc.epochs = 30;
  tc.batch_size = 8;
  tc.lr = 2e-3;
  tc.seed = 9;
  const auto r1 = train::train(init, ds, tc);
  const auto r2 = train::train(init, ds, tc);
  REQUIRE(r1.history.size() == 30);
  CHECK(r1.history.back().train_loss < r1.history.front().train_loss);
  for (std::size_t e = 0; e < r1.history.size(); ++e) {
    CHECK(r1.history[e].train_loss == r2.history[e].train_loss);
    CHECK(r1.history[e].val_r1 == r2.history[e].val_r1);
  }
  // The snapshot is the earliest epoch reaching the best validation R@1.
  double best = -1.0;
  std::size_t best_epoch = 0;
  for (const auto& h : r1.history)
    if (h.val_r1 && *h.val_r1 > best) {
      best = *h.val_r1;
      best_epoch = h.epoch;
    }
  CHECK(r1.best_epoch == best_epoch);
  CHECK(r1.best_val_r1 == best);
}

TEST_CASE("random-boundary training leaves the true tiers alone") {
  const auto ds = synth::generate(small_spec(50));
  const auto before = ds.utterances[0].tiers.at(seg::Level::word).bits;
  const auto config = enc::with_packagers(small_encoder(), {2}, {seg::Level::word},
                                          enc::PackMode::keep);
  train::TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 8;
  train::train(enc::Model::init(config, 3), ds, tc, enc::BoundarySource::random_tiers);
  CHECK(ds.utterances[0].tiers.at(seg::Level::word).bits == before);
  CHECK(ds.utterances[0].random_tiers.empty());

  const auto shuffled = train::with_random_tiers(ds, 5);
  for (const auto& u : shuffled.utterances) {
    CHECK(u.random_tiers.at(seg::Level::word).popcount() == u.tiers.at(seg::Level::word).popcount());
  }
}

TEST_CASE("train config validation") {
  train::TrainConfig tc;
  tc.batch_size = 1;
  CHECK_THROWS(train::validate(tc));
  tc = {};
  tc.margin_alpha = 0.0;
  CHECK_THROWS(train::validate(tc));
  CHECK_NOTHROW(train::validate(train::TrainConfig{}));
}
