// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "grupack/numerics/adam.hpp"
#include "grupack/numerics/autograd.hpp"
#include "grupack/numerics/grad_check.hpp"
#include "grupack/numerics/kernels.hpp"

using namespace grupack::num;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> normal(0.0, scale);
  for (auto& v : t.values()) v = normal(rng);
  return t;
}

}  // namespace

TEST_CASE("tensor construction and shape checks") {
  Tensor t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.at(1, 2) == 1.5);
  CHECK_THROWS_AS(Tensor(Shape{2, 0}), DimensionError);
  CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  CHECK(shape_string({2, 3}) == "[2x3]");
  Tensor id = Tensor::identity(3);
  CHECK(id.at(1, 1) == 1.0);
  CHECK(id.at(0, 1) == 0.0);
  CHECK(t.reshaped({3, 2}).dim(0) == 3);
  CHECK_THROWS_AS(t.reshaped({4, 2}), DimensionError);
}

TEST_CASE("matmul of 2x2 matrices") {
  auto a = constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  auto b = constant(Tensor::matrix(2, 2, {5, 6, 7, 8}));
  auto c = matmul(a, b);
  CHECK(c.value().at(0, 0) == 19);
  CHECK(c.value().at(0, 1) == 22);
  CHECK(c.value().at(1, 0) == 43);
  CHECK(c.value().at(1, 1) == 50);
  CHECK_THROWS_AS(matmul(a, constant(Tensor({3, 2}))), DimensionError);
}

TEST_CASE("matmul gradient by hand") {
  auto a = parameter(Tensor::matrix(1, 2, {1, 2}));
  auto b = parameter(Tensor::matrix(2, 1, {3, 4}));
  backward(sum(matmul(a, b)));
  CHECK(a.grad()[0] == 3);
  CHECK(a.grad()[1] == 4);
  CHECK(b.grad()[0] == 1);
  CHECK(b.grad()[1] == 2);
}

TEST_CASE("leaf gradients accumulate until zero_grad") {
  auto x = parameter(Tensor::scalar(2.0));
  backward(scale(x, 3.0));
  backward(scale(x, 3.0));
  CHECK(x.grad()[0] == doctest::Approx(6.0));
  zero_grad({x});
  CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("no-grad guard records nothing") {
  auto x = parameter(Tensor::scalar(1.0));
  {
    NoGradGuard guard;
    CHECK_FALSE(grad_enabled());
    auto y = tanh(x);
    CHECK_FALSE(y.requires_grad());
  }
  CHECK(grad_enabled());
}

TEST_CASE("sigmoid is stable for large inputs") {
  auto y = sigmoid(constant(Tensor({2}, std::vector<double>{-800.0, 800.0})));
  CHECK(y.value()[0] == 0.0);
  CHECK(y.value()[1] == 1.0);
}

TEST_CASE("masked softmax puts zero mass on masked positions") {
  auto s = constant(Tensor::matrix(2, 3, {1, 2, 3, 0.5, 0.5, 100}));
  Tensor mask = Tensor::matrix(2, 3, {1, 1, 0, 1, 1, 0});
  auto p = masked_softmax(s, mask);
  CHECK(p.value().at(0, 2) == 0.0);
  CHECK(p.value().at(1, 2) == 0.0);
  CHECK(p.value().at(0, 0) + p.value().at(0, 1) == doctest::Approx(1.0));
  CHECK(p.value().at(1, 0) == doctest::Approx(0.5));
  CHECK_THROWS(masked_softmax(s, Tensor::matrix(2, 3, {1, 1, 1, 0, 0, 0})));
}

TEST_CASE("l2 normalisation and zero-norm rows") {
  auto y = l2_normalize_rows(constant(Tensor::matrix(1, 2, {3, 4})));
  CHECK(y.value()[0] == doctest::Approx(0.6));
  CHECK(y.value()[1] == doctest::Approx(0.8));
  CHECK_THROWS_WITH(l2_normalize_rows(constant(Tensor({1, 2}))), "zero-norm embedding");
}

TEST_CASE("grad_check on a composed expression over 100 seeds") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    auto x = parameter(random_tensor({3, 4}, rng));
    auto w = parameter(random_tensor({4, 2}, rng));
    auto b = parameter(random_tensor({2}, rng));
    auto v = parameter(random_tensor({3, 2}, rng));
    Tensor mask = Tensor::matrix(3, 2, {1, 1, 1, 0, 0, 1});
    auto f = [&] {
      auto h = tanh(add_row(matmul(x, w), b));
      auto g = mul(sigmoid(h), sub(v, h));
      auto sm = masked_softmax(add(g, scale(h, 0.5)), mask);
      auto n = l2_normalize_rows(add(h, v));
      return sum(add(mul(sm, n), reshape(scale(g, 0.1), {3, 2})));
    };
    CHECK(grad_check(f, {x, w, b, v}) < 1e-6);
  }
}

TEST_CASE("grad_check rejects bad step sizes") {
  auto x = parameter(Tensor::scalar(1.0));
  auto f = [&] { return tanh(x); };
  CHECK_THROWS(grad_check(f, {x}, 0.0));
  CHECK_THROWS(grad_check(f, {x}, 0.1));
}

TEST_CASE("pointwise dispatch matches named ops") {
  std::mt19937_64 rng(3);
  auto a = constant(random_tensor({5}, rng));
  auto b = constant(random_tensor({5}, rng));
  CHECK(pointwise(Pointwise::tanh, a).value().values()[2] == tanh(a).value().values()[2]);
  CHECK(pointwise(Pointwise::mul, a, b).value()[4] == mul(a, b).value()[4]);
  CHECK(pointwise(Pointwise::scale, a, {}, 2.0).value()[1] == scale(a, 2.0).value()[1]);
}

TEST_CASE("serial and parallel gemm agree bitwise") {
  std::mt19937_64 rng(11);
  for (auto [m, n, k] : {std::tuple{3, 5, 7}, std::tuple{64, 64, 64}, std::tuple{129, 33, 70}}) {
    for (bool ta : {false, true}) {
      for (bool tb : {false, true}) {
        const auto a = random_tensor({static_cast<std::size_t>(m * k)}, rng);
        const auto b = random_tensor({static_cast<std::size_t>(k * n)}, rng);
        std::vector<double> c1(m * n, 0.5), c2(m * n, 0.5);
        gemm_serial(ta, tb, m, n, k, a.data(), b.data(), c1.data());
        gemm_parallel(ta, tb, m, n, k, a.data(), b.data(), c2.data());
        CHECK(c1 == c2);
      }
    }
  }
}

TEST_CASE("adam leaves parameters unchanged with lr 0") {
  auto w = parameter(Tensor({3}, std::vector<double>{1, 2, 3}));
  backward(sum(mul(w, w)));
  AdamState st;
  st.lr = 0.0;
  adam_update(st, {w});
  CHECK(w.value()[0] == 1.0);
  CHECK(w.value()[2] == 3.0);
}

TEST_CASE("adam first step moves by lr against the gradient sign") {
  auto w = parameter(Tensor({3}, std::vector<double>{1, -2, 0.5}));
  backward(sum(mul(w, w)));
  w.value().grad()[2] = 0.0;
  AdamState st;
  st.lr = 0.01;
  adam_update(st, {w});
  CHECK(w.value()[0] == doctest::Approx(0.99).epsilon(1e-6));
  CHECK(w.value()[1] == doctest::Approx(-1.99).epsilon(1e-6));
  CHECK(w.value()[2] == 0.5);  // zero gradient from fresh moments: no move
}

TEST_CASE("adam rejects non-finite gradients before updating") {
  auto w = parameter(Tensor({2}, std::vector<double>{1, 2}));
  w.value().ensure_grad();
  w.value().grad()[0] = 1.0;
  w.value().grad()[1] = std::nan("");
  AdamState st;
  CHECK_THROWS_AS(adam_update(st, {w}), NumericError);
  CHECK(w.value()[0] == 1.0);
  CHECK(st.step == 0);
}
