// SPDX-License-Identifier: Apache-2.0
// Serial reference vs OpenMP kernels. Arg 0 selects serial, 1 parallel.

#include <benchmark/benchmark.h>

#include <random>

#include "grupack/encoder/gru.hpp"
#include "grupack/encoder/layers.hpp"
#include "grupack/evaluation/retrieval.hpp"

namespace {

using namespace grupack;

num::Exec exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? num::Exec::serial : num::Exec::parallel;
}

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

void BM_Gemm(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(1));
  const auto a = random_values(n * n, 1), b = random_values(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    std::fill(c.begin(), c.end(), 0.0);
    num::gemm_accumulate(exec_of(state), false, false, n, n, n, a.data(), b.data(), c.data());
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * n * n * n));
}
BENCHMARK(BM_Gemm)->ArgsProduct({{0, 1}, {64, 256}});

enc::SequenceBatch random_batch(std::size_t B, std::size_t T, std::size_t d) {
  enc::SequenceBatch batch;
  batch.data = num::parameter(num::Tensor({B, T, d}, random_values(B * T * d, 3)));
  batch.lengths.assign(B, T);
  return batch;
}

void BM_GruSequence(benchmark::State& state) {
  const auto batch = random_batch(16, 48, 32);
  std::mt19937_64 rng(4);
  const auto p = enc::GruParams::init(32, 32, rng);
  for (auto _ : state) {
    auto out = enc::gru_sequence(batch.data, batch.lengths, nullptr, p, exec_of(state));
    num::Var loss = num::sum(out);
    num::backward(loss);
    benchmark::DoNotOptimize(out.value().data());
  }
}
BENCHMARK(BM_GruSequence)->Arg(0)->Arg(1);

void BM_Conv(benchmark::State& state) {
  const auto batch = random_batch(16, 48, 13);
  std::mt19937_64 rng(5);
  const auto p = enc::ConvParams::init(13, enc::ConvSpec{}, rng);
  for (auto _ : state) {
    auto out = enc::conv1d(batch, p, exec_of(state));
    num::backward(num::sum(out.data));
    benchmark::DoNotOptimize(out.data.value().data());
  }
}
BENCHMARK(BM_Conv)->Arg(0)->Arg(1);

void BM_RankImages(benchmark::State& state) {
  const std::size_t n = 1000, e = 32;
  const num::Tensor images({n, e}, random_values(n * e, 6));
  const auto query = random_values(e, 7);
  for (auto _ : state) benchmark::DoNotOptimize(eval::rank_images(query, images));
}
BENCHMARK(BM_RankImages);

}  // namespace

BENCHMARK_MAIN();
