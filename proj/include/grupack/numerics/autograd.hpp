// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "grupack/numerics/tensor.hpp"

namespace grupack::num {

struct Node;

/// Handle to a node of the reverse-mode tape. Copies share the node.
///
/// Leaves created with `parameter()` accumulate gradients across backward
/// passes until zero_grad(); intermediate nodes are reset on every pass.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Tensor& value() const;
  Tensor& value();
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  std::span<const double> grad() const { return value().grad(); }
  bool requires_grad() const;
  bool defined() const { return static_cast<bool>(node_); }

  Node& node() const { return *node_; }
  const std::shared_ptr<Node>& ptr() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

struct Node {
  Tensor value;
  std::vector<Var> parents;
  // Reads value.grad() and adds contributions into each parent that
  // requires a gradient.
  std::function<void(Node&)> backward_fn;
  bool requires_grad = false;
  bool is_leaf = true;
};

Var parameter(Tensor t);
Var constant(Tensor t);

/// Records an operation. Falls back to a constant when no parent needs a
/// gradient or recording is disabled on this thread.
Var make_op(Tensor value, std::vector<Var> parents,
            std::function<void(Node&)> backward_fn);

/// Grad of `parent` ready for accumulation, or empty span when the parent
/// does not take gradients.
std::span<double> grad_sink(const Var& parent);

/// Runs the reverse pass from a single-element root, seeding d(root) = 1.
void backward(const Var& root);

void zero_grad(const std::vector<Var>& params);

bool grad_enabled();

/// Disables tape recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Differentiable operations.

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var tanh(const Var& a);
Var sigmoid(const Var& a);
/// a (m x n) + bias (n) broadcast over rows.
Var add_row(const Var& a, const Var& bias);
Var sum(const Var& a);
Var reshape(const Var& a, Shape shape);
/// Row-wise softmax restricted to positions where mask == 1. Accepts a 1-D
/// vector (one row) or a 2-D matrix. Masked positions are exactly 0.
Var masked_softmax(const Var& scores, const Tensor& mask);
/// Divides each row of a 2-D tensor by its L2 norm.
Var l2_normalize_rows(const Var& a);

enum class Pointwise { tanh, sigmoid, add, mul, sub, scale };

/// Dispatching form of the pointwise family. Unary ops read `a` only; `scale`
/// uses `factor`.
Var pointwise(Pointwise op, const Var& a, const Var& b = {}, double factor = 1.0);

}  // namespace grupack::num
