// SPDX-License-Identifier: Apache-2.0
#include "grupack/numerics/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "grupack/numerics/kernels.hpp"

namespace grupack::num {

namespace {
thread_local bool t_grad_enabled = true;

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace

const Tensor& Var::value() const { return node_->value; }
Tensor& Var::value() { return node_->value; }
bool Var::requires_grad() const { return node_ && node_->requires_grad; }

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) {
  t_grad_enabled = false;
}
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

Var parameter(Tensor t) {
  auto node = std::make_shared<Node>();
  node->value = std::move(t);
  node->value.ensure_grad();
  node->requires_grad = true;
  return Var(std::move(node));
}

Var constant(Tensor t) {
  auto node = std::make_shared<Node>();
  node->value = std::move(t);
  return Var(std::move(node));
}

Var make_op(Tensor value, std::vector<Var> parents,
            std::function<void(Node&)> backward_fn) {
  bool needs = false;
  if (t_grad_enabled) {
    for (const auto& p : parents) needs = needs || p.requires_grad();
  }
  if (!needs) return constant(std::move(value));
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->parents = std::move(parents);
  node->backward_fn = std::move(backward_fn);
  node->requires_grad = true;
  node->is_leaf = false;
  return Var(std::move(node));
}

std::span<double> grad_sink(const Var& parent) {
  if (!parent.requires_grad()) return {};
  Tensor& t = parent.node().value;
  t.ensure_grad();
  return t.grad();
}

void backward(const Var& root) {
  if (root.size() != 1) {
    throw DimensionError("backward needs a single-element root, got " +
                         shape_string(root.shape()));
  }
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{&root.node(), 0}};
  seen.insert(&root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = &node->parents[next++].node();
      if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    if (!n->is_leaf) {
      n->value.ensure_grad();
      n->value.zero_grad();
    }
  }
  root.node().value.ensure_grad();
  root.node().value.grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (!(*it)->is_leaf && (*it)->backward_fn) (*it)->backward_fn(**it);
  }
}

void zero_grad(const std::vector<Var>& params) {
  for (const auto& p : params) p.node().value.zero_grad();
}

Var matmul(const Var& a, const Var& b) {
  if (a.value().rank() != 2 || b.value().rank() != 2 ||
      a.shape()[1] != b.shape()[0]) {
    throw DimensionError("matmul: incompatible shapes " +
                         shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
  }
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  Tensor out({m, n});
  gemm_accumulate(default_exec(), false, false, m, n, k, a.value().data(),
                  b.value().data(), out.data());
  return make_op(std::move(out), {a, b}, [m, k, n](Node& self) {
    const Var& a = self.parents[0];
    const Var& b = self.parents[1];
    const double* g = self.value.grad().data();
    if (auto ga = grad_sink(a); !ga.empty()) {
      gemm_accumulate(default_exec(), false, true, m, k, n, g,
                      b.value().data(), ga.data());
    }
    if (auto gb = grad_sink(b); !gb.empty()) {
      gemm_accumulate(default_exec(), true, false, k, n, m, a.value().data(), g,
                      gb.data());
    }
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape("add", a, b);
  Tensor out = a.value().values_only();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return make_op(std::move(out), {a, b}, [](Node& self) {
    const auto g = self.value.grad();
    for (const auto& p : self.parents) {
      if (auto gp = grad_sink(p); !gp.empty()) {
        for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i];
      }
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape("sub", a, b);
  Tensor out = a.value().values_only();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return make_op(std::move(out), {a, b}, [](Node& self) {
    const auto g = self.value.grad();
    if (auto ga = grad_sink(self.parents[0]); !ga.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (auto gb = grad_sink(self.parents[1]); !gb.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape("mul", a, b);
  Tensor out = a.value().values_only();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return make_op(std::move(out), {a, b}, [](Node& self) {
    const auto g = self.value.grad();
    const Var& a = self.parents[0];
    const Var& b = self.parents[1];
    if (auto ga = grad_sink(a); !ga.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b.value()[i];
    }
    if (auto gb = grad_sink(b); !gb.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a.value()[i];
    }
  });
}

Var scale(const Var& a, double s) {
  Tensor out = a.value().values_only();
  for (auto& v : out.values()) v *= s;
  return make_op(std::move(out), {a}, [s](Node& self) {
    const auto g = self.value.grad();
    if (auto ga = grad_sink(self.parents[0]); !ga.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
    }
  });
}

Var tanh(const Var& a) {
  Tensor out = a.value().values_only();
  for (auto& v : out.values()) v = std::tanh(v);
  return make_op(std::move(out), {a}, [](Node& self) {
    const auto g = self.value.grad();
    const auto y = self.value.values();
    if (auto ga = grad_sink(self.parents[0]); !ga.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
    }
  });
}

Var sigmoid(const Var& a) {
  Tensor out = a.value().values_only();
  for (auto& v : out.values()) v = stable_sigmoid(v);
  return make_op(std::move(out), {a}, [](Node& self) {
    const auto g = self.value.grad();
    const auto y = self.value.values();
    if (auto ga = grad_sink(self.parents[0]); !ga.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
    }
  });
}

Var add_row(const Var& a, const Var& bias) {
  if (a.value().rank() != 2 || bias.size() != a.shape()[1]) {
    throw DimensionError("add_row: cannot broadcast " +
                         shape_string(bias.shape()) + " over rows of " +
                         shape_string(a.shape()));
  }
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  Tensor out = a.value().values_only();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) += bias.value()[j];
  return make_op(std::move(out), {a, bias}, [m, n](Node& self) {
    const auto g = self.value.grad();
    if (auto ga = grad_sink(self.parents[0]); !ga.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (auto gb = grad_sink(self.parents[1]); !gb.empty()) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
    }
  });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return make_op(Tensor::scalar(s), {a}, [](Node& self) {
    const double g = self.value.grad()[0];
    if (auto ga = grad_sink(self.parents[0]); !ga.empty()) {
      for (auto& v : ga) v += g;
    }
  });
}

Var reshape(const Var& a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return make_op(std::move(out), {a}, [](Node& self) {
    const auto g = self.value.grad();
    if (auto ga = grad_sink(self.parents[0]); !ga.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
  });
}

Var masked_softmax(const Var& scores, const Tensor& mask) {
  if (scores.value().rank() > 2 || mask.size() != scores.size()) {
    throw DimensionError("masked_softmax: scores " +
                         shape_string(scores.shape()) + " vs mask " +
                         shape_string(mask.shape()));
  }
  const std::size_t rows = scores.value().rank() == 2 ? scores.shape()[0] : 1;
  const std::size_t cols = scores.size() / rows;
  Tensor out(scores.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* s = scores.value().data() + r * cols;
    const double* m = mask.data() + r * cols;
    double* y = out.data() + r * cols;
    double mx = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t t = 0; t < cols; ++t) {
      if (m[t] != 0.0) {
        any = true;
        mx = std::max(mx, s[t]);
      }
    }
    if (!any) throw NumericError("empty attention support");
    double z = 0.0;
    for (std::size_t t = 0; t < cols; ++t) {
      if (m[t] != 0.0) {
        y[t] = std::exp(s[t] - mx);
        z += y[t];
      }
    }
    for (std::size_t t = 0; t < cols; ++t) y[t] /= z;
  }
  return make_op(std::move(out), {scores}, [rows, cols](Node& self) {
    auto gs = grad_sink(self.parents[0]);
    if (gs.empty()) return;
    const auto g = self.value.grad();
    const auto y = self.value.values();
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t t = 0; t < cols; ++t) dot += y[r * cols + t] * g[r * cols + t];
      for (std::size_t t = 0; t < cols; ++t) {
        const std::size_t i = r * cols + t;
        gs[i] += y[i] * (g[i] - dot);
      }
    }
  });
}

Var l2_normalize_rows(const Var& a) {
  if (a.value().rank() != 2) {
    throw DimensionError("l2_normalize_rows needs a matrix, got " +
                         shape_string(a.shape()));
  }
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  Tensor out({m, n});
  std::vector<double> norms(m);
  for (std::size_t i = 0; i < m; ++i) {
    double ss = 0.0;
    for (std::size_t j = 0; j < n; ++j) ss += a.value().at(i, j) * a.value().at(i, j);
    norms[i] = std::sqrt(ss);
    if (!(norms[i] > 0.0)) throw NumericError("zero-norm embedding");
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) = a.value().at(i, j) / norms[i];
  }
  return make_op(std::move(out), {a},
                 [m, n, norms = std::move(norms)](Node& self) {
                   auto ga = grad_sink(self.parents[0]);
                   if (ga.empty()) return;
                   const auto g = self.value.grad();
                   const auto y = self.value.values();
                   for (std::size_t i = 0; i < m; ++i) {
                     double dot = 0.0;
                     for (std::size_t j = 0; j < n; ++j) dot += y[i * n + j] * g[i * n + j];
                     for (std::size_t j = 0; j < n; ++j) {
                       ga[i * n + j] += (g[i * n + j] - y[i * n + j] * dot) / norms[i];
                     }
                   }
                 });
}

Var pointwise(Pointwise op, const Var& a, const Var& b, double factor) {
  switch (op) {
    case Pointwise::tanh: return tanh(a);
    case Pointwise::sigmoid: return sigmoid(a);
    case Pointwise::add: return add(a, b);
    case Pointwise::mul: return mul(a, b);
    case Pointwise::sub: return sub(a, b);
    case Pointwise::scale: return scale(a, factor);
  }
  throw std::invalid_argument("unknown pointwise op");
}

}  // namespace grupack::num
