// SPDX-License-Identifier: Apache-2.0
#include "grupack/encoder/gru.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace grupack::enc {

using num::Tensor;
using num::Var;

namespace {

struct RawParams {
  std::size_t din = 0, dh = 0;
  const double *Wz, *Wr, *Wh, *Uz, *Ur, *Uh, *bz, *br, *bh;
};

RawParams raw(const std::vector<Var>& p) {
  RawParams r;
  r.din = p[0].shape()[0];
  r.dh = p[0].shape()[1];
  r.Wz = p[0].value().data();
  r.Wr = p[1].value().data();
  r.Wh = p[2].value().data();
  r.Uz = p[3].value().data();
  r.Ur = p[4].value().data();
  r.Uh = p[5].value().data();
  r.bz = p[6].value().data();
  r.br = p[7].value().data();
  r.bh = p[8].value().data();
  return r;
}

// Offsets of each parameter inside a flat gradient buffer, same order as
// GruParams::list().
struct GradLayout {
  std::size_t offset[9];
  std::size_t total;
  explicit GradLayout(std::size_t din, std::size_t dh) {
    const std::size_t sizes[9] = {din * dh, din * dh, din * dh, dh * dh, dh * dh,
                                  dh * dh,  dh,       dh,       dh};
    std::size_t acc = 0;
    for (int i = 0; i < 9; ++i) {
      offset[i] = acc;
      acc += sizes[i];
    }
    total = acc;
  }
};

double sigm(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Scratch of 6 * dh doubles.
void step_forward(const RawParams& P, const double* x, const double* hp, double* z,
                  double* r, double* hh, double* h, double* scratch) {
  const std::size_t din = P.din, dh = P.dh;
  double* rh = scratch;
  std::copy(P.bz, P.bz + dh, z);
  std::copy(P.br, P.br + dh, r);
  std::copy(P.bh, P.bh + dh, hh);
  num::vecmat_accumulate(din, dh, x, P.Wz, z);
  num::vecmat_accumulate(din, dh, x, P.Wr, r);
  num::vecmat_accumulate(din, dh, x, P.Wh, hh);
  num::vecmat_accumulate(dh, dh, hp, P.Uz, z);
  num::vecmat_accumulate(dh, dh, hp, P.Ur, r);
  for (std::size_t j = 0; j < dh; ++j) {
    z[j] = sigm(z[j]);
    r[j] = sigm(r[j]);
    rh[j] = r[j] * hp[j];
  }
  num::vecmat_accumulate(dh, dh, rh, P.Uh, hh);
  for (std::size_t j = 0; j < dh; ++j) {
    hh[j] = std::tanh(hh[j]);
    h[j] = (1.0 - z[j]) * hp[j] + z[j] * hh[j];
  }
}

// Adds parameter gradients into `g` (GradLayout order), input gradient into
// `dx` when non-null, and writes the gradient w.r.t. the incoming state to dhp.
void step_backward(const RawParams& P, const GradLayout& L, const double* x,
                   const double* hp, const double* z, const double* r, const double* hh,
                   const double* dh_out, double* g, double* dx, double* dhp,
                   double* scratch) {
  const std::size_t din = P.din, dh = P.dh;
  double* da_z = scratch;
  double* da_r = scratch + dh;
  double* da_h = scratch + 2 * dh;
  double* rh = scratch + 3 * dh;
  double* drh = scratch + 4 * dh;
  for (std::size_t j = 0; j < dh; ++j) {
    const double dz = dh_out[j] * (hh[j] - hp[j]);
    const double dhh = dh_out[j] * z[j];
    dhp[j] = dh_out[j] * (1.0 - z[j]);
    da_h[j] = dhh * (1.0 - hh[j] * hh[j]);
    da_z[j] = dz * z[j] * (1.0 - z[j]);
    rh[j] = r[j] * hp[j];
    drh[j] = 0.0;
  }
  num::outer_accumulate(din, dh, x, da_h, g + L.offset[2]);
  num::outer_accumulate(dh, dh, rh, da_h, g + L.offset[5]);
  num::matvec_accumulate(dh, dh, P.Uh, da_h, drh);
  for (std::size_t j = 0; j < dh; ++j) {
    da_r[j] = drh[j] * hp[j] * r[j] * (1.0 - r[j]);
    dhp[j] += drh[j] * r[j];
    g[L.offset[6] + j] += da_z[j];
    g[L.offset[7] + j] += da_r[j];
    g[L.offset[8] + j] += da_h[j];
  }
  num::outer_accumulate(din, dh, x, da_z, g + L.offset[0]);
  num::outer_accumulate(din, dh, x, da_r, g + L.offset[1]);
  num::outer_accumulate(dh, dh, hp, da_z, g + L.offset[3]);
  num::outer_accumulate(dh, dh, hp, da_r, g + L.offset[4]);
  num::matvec_accumulate(dh, dh, P.Uz, da_z, dhp);
  num::matvec_accumulate(dh, dh, P.Ur, da_r, dhp);
  if (dx) {
    num::matvec_accumulate(din, dh, P.Wz, da_z, dx);
    num::matvec_accumulate(din, dh, P.Wr, da_r, dx);
    num::matvec_accumulate(din, dh, P.Wh, da_h, dx);
  }
}

void check_params(const GruParams& p) {
  const std::size_t din = p.input_dim(), dh = p.hidden_dim();
  const auto ok = [](const Var& v, num::Shape s) { return v.shape() == s; };
  if (!ok(p.W_r, {din, dh}) || !ok(p.W_h, {din, dh}) || !ok(p.U_z, {dh, dh}) ||
      !ok(p.U_r, {dh, dh}) || !ok(p.U_h, {dh, dh}) || !ok(p.b_z, {dh}) ||
      !ok(p.b_r, {dh}) || !ok(p.b_h, {dh})) {
    throw num::DimensionError("inconsistent GRU parameter shapes");
  }
}

// Adds a flat gradient buffer into the parameter gradients.
void scatter_param_grads(const std::vector<Var>& params, const GradLayout& L,
                         const double* g) {
  for (int k = 0; k < 9; ++k) {
    auto sink = num::grad_sink(params[static_cast<std::size_t>(k)]);
    for (std::size_t i = 0; i < sink.size(); ++i) sink[i] += g[L.offset[k] + i];
  }
}

struct SequenceCache {
  std::vector<double> hp, z, r, hh;  // each B*T*dh
};

}  // namespace

const std::vector<std::string>& GruParams::names() {
  static const std::vector<std::string> n = {"W_z", "W_r", "W_h", "U_z", "U_r",
                                             "U_h", "b_z", "b_r", "b_h"};
  return n;
}

GruParams GruParams::init(std::size_t d_in, std::size_t d_h, std::mt19937_64& rng) {
  const auto uniform = [&rng](std::size_t rows, std::size_t cols) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor t({rows, cols});
    for (auto& v : t.values()) v = dist(rng);
    return num::parameter(std::move(t));
  };
  GruParams p;
  p.W_z = uniform(d_in, d_h);
  p.W_r = uniform(d_in, d_h);
  p.W_h = uniform(d_in, d_h);
  p.U_z = uniform(d_h, d_h);
  p.U_r = uniform(d_h, d_h);
  p.U_h = uniform(d_h, d_h);
  p.b_z = num::parameter(Tensor({d_h}));
  p.b_r = num::parameter(Tensor({d_h}));
  p.b_h = num::parameter(Tensor({d_h}));
  return p;
}

GruParams GruParams::zeros(std::size_t d_in, std::size_t d_h) {
  GruParams p;
  p.W_z = num::parameter(Tensor({d_in, d_h}));
  p.W_r = num::parameter(Tensor({d_in, d_h}));
  p.W_h = num::parameter(Tensor({d_in, d_h}));
  p.U_z = num::parameter(Tensor({d_h, d_h}));
  p.U_r = num::parameter(Tensor({d_h, d_h}));
  p.U_h = num::parameter(Tensor({d_h, d_h}));
  p.b_z = num::parameter(Tensor({d_h}));
  p.b_r = num::parameter(Tensor({d_h}));
  p.b_h = num::parameter(Tensor({d_h}));
  return p;
}

std::vector<double> gru_step(std::span<const double> h_prev, std::span<const double> x,
                             const GruParams& p) {
  check_params(p);
  if (h_prev.size() != p.hidden_dim() || x.size() != p.input_dim()) {
    throw num::DimensionError("gru_step: state/input sizes do not match parameters");
  }
  const RawParams P = raw(p.list());
  const std::size_t dh = P.dh;
  std::vector<double> z(dh), r(dh), hh(dh), h(dh), scratch(6 * dh);
  step_forward(P, x.data(), h_prev.data(), z.data(), r.data(), hh.data(), h.data(),
               scratch.data());
  return h;
}

Var gru_step(const Var& h_prev, const Var& x, const GruParams& p) {
  check_params(p);
  const std::size_t din = p.input_dim(), dh = p.hidden_dim();
  if (h_prev.size() != dh || x.size() != din) {
    throw num::DimensionError("gru_step: state " + num::shape_string(h_prev.shape()) +
                              " / input " + num::shape_string(x.shape()) +
                              " do not match parameters");
  }
  std::vector<Var> parents = p.list();
  parents.push_back(h_prev);
  parents.push_back(x);
  const RawParams P = raw(parents);
  auto cache = std::make_shared<std::vector<double>>(3 * dh);
  Tensor out({dh});
  std::vector<double> scratch(6 * dh);
  step_forward(P, x.value().data(), h_prev.value().data(), cache->data(),
               cache->data() + dh, cache->data() + 2 * dh, out.data(), scratch.data());
  return num::make_op(std::move(out), std::move(parents), [din, dh, cache](num::Node& self) {
    const RawParams P = raw(self.parents);
    const GradLayout L(din, dh);
    std::vector<double> g(L.total, 0.0), dx(din, 0.0), dhp(dh), scratch(6 * dh);
    const Var& hp = self.parents[9];
    const Var& x = self.parents[10];
    step_backward(P, L, x.value().data(), hp.value().data(), cache->data(),
                  cache->data() + dh, cache->data() + 2 * dh, self.value.grad().data(),
                  g.data(), dx.data(), dhp.data(), scratch.data());
    scatter_param_grads(self.parents, L, g.data());
    if (auto s = num::grad_sink(hp); !s.empty())
      for (std::size_t j = 0; j < dh; ++j) s[j] += dhp[j];
    if (auto s = num::grad_sink(x); !s.empty())
      for (std::size_t j = 0; j < din; ++j) s[j] += dx[j];
  });
}

Var gru_sequence(const Var& data, const std::vector<std::size_t>& lengths,
                 const std::vector<seg::Bits>* resets, const GruParams& p, num::Exec exec) {
  check_params(p);
  const auto& X = data.value();
  if (X.rank() != 3 || X.dim(2) != p.input_dim() || X.dim(0) != lengths.size()) {
    throw num::DimensionError("gru_sequence: input " + num::shape_string(X.shape()) +
                              " does not match GRU input width " +
                              std::to_string(p.input_dim()));
  }
  if (resets && resets->size() != lengths.size()) {
    throw num::DimensionError("gru_sequence: one reset row per item required");
  }
  const std::size_t B = X.dim(0), T = X.dim(1), din = X.dim(2), dh = p.hidden_dim();
  std::vector<Var> parents = p.list();
  parents.insert(parents.begin(), data);
  const RawParams P = raw(std::vector<Var>(parents.begin() + 1, parents.end()));

  auto cache = std::make_shared<SequenceCache>();
  cache->hp.assign(B * T * dh, 0.0);
  cache->z.assign(B * T * dh, 0.0);
  cache->r.assign(B * T * dh, 0.0);
  cache->hh.assign(B * T * dh, 0.0);
  Tensor out({B, T, dh});
  double* H = out.data();
  const double* Xd = X.data();
  auto resets_copy = resets ? std::make_shared<std::vector<seg::Bits>>(*resets)
                            : std::shared_ptr<std::vector<seg::Bits>>();

  const long items = static_cast<long>(B);
#pragma omp parallel for schedule(static) if (exec == num::Exec::parallel && B > 1)
  for (long bi = 0; bi < items; ++bi) {
    const auto b = static_cast<std::size_t>(bi);
    std::vector<double> scratch(6 * dh);
    for (std::size_t t = 0; t < lengths[b]; ++t) {
      const std::size_t at = (b * T + t) * dh;
      const bool fresh = t == 0 || (resets_copy && (*resets_copy)[b][t - 1]);
      if (!fresh) std::copy(H + at - dh, H + at, cache->hp.data() + at);
      step_forward(P, Xd + (b * T + t) * din, cache->hp.data() + at, cache->z.data() + at,
                   cache->r.data() + at, cache->hh.data() + at, H + at, scratch.data());
    }
  }

  return num::make_op(
      std::move(out), std::move(parents),
      [B, T, din, dh, lengths, resets_copy, cache, exec](num::Node& self) {
        const RawParams P = raw(std::vector<Var>(self.parents.begin() + 1, self.parents.end()));
        const GradLayout L(din, dh);
        const Var& input = self.parents[0];
        auto gx = num::grad_sink(input);
        const double* Xd = input.value().data();
        const double* G = self.value.grad().data();
        // One gradient buffer per item, reduced in item order afterwards so
        // the result does not depend on the thread count.
        std::vector<double> item_grads(B * L.total, 0.0);
        const long items = static_cast<long>(B);
#pragma omp parallel for schedule(static) if (exec == num::Exec::parallel && B > 1)
        for (long bi = 0; bi < items; ++bi) {
          const auto b = static_cast<std::size_t>(bi);
          std::vector<double> carry(dh, 0.0), dh_t(dh), dhp(dh), scratch(6 * dh);
          double* g = item_grads.data() + b * L.total;
          for (std::size_t t = lengths[b]; t-- > 0;) {
            const std::size_t at = (b * T + t) * dh;
            for (std::size_t j = 0; j < dh; ++j) dh_t[j] = G[at + j] + carry[j];
            step_backward(P, L, Xd + (b * T + t) * din, cache->hp.data() + at,
                          cache->z.data() + at, cache->r.data() + at, cache->hh.data() + at,
                          dh_t.data(), g, gx.empty() ? nullptr : gx.data() + (b * T + t) * din,
                          dhp.data(), scratch.data());
            const bool fresh = t == 0 || (resets_copy && (*resets_copy)[b][t - 1]);
            if (fresh) std::fill(carry.begin(), carry.end(), 0.0);
            else carry = dhp;
          }
        }
        std::vector<double> total(L.total, 0.0);
        for (std::size_t b = 0; b < B; ++b) {
          const double* g = item_grads.data() + b * L.total;
          for (std::size_t i = 0; i < L.total; ++i) total[i] += g[i];
        }
        scatter_param_grads(std::vector<Var>(self.parents.begin() + 1, self.parents.end()), L,
                            total.data());
      });
}

SequenceBatch vanilla_forward(const SequenceBatch& batch, const GruParams& p, num::Exec exec) {
  SequenceBatch out;
  out.data = gru_sequence(batch.data, batch.lengths, nullptr, p, exec);
  out.lengths = batch.lengths;
  out.tiers = batch.tiers;
  return out;
}

SequenceBatch keep_segment_ends(const SequenceBatch& batch, seg::Level level) {
  auto it = batch.tiers.find(level);
  if (it == batch.tiers.end()) {
    throw ConfigError("KEEP reduction needs a " + seg::to_string(level) + " tier");
  }
  const std::size_t B = batch.batch_size(), T = batch.max_length(), d = batch.feature_dim();
  std::vector<std::vector<std::size_t>> keep(B);
  std::size_t t_out = 0;
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < batch.lengths[b]; ++t)
      if (it->second[b][t]) keep[b].push_back(t);
    if (keep[b].empty()) {
      throw seg::SegmentationError("KEEP with a zero-popcount " + seg::to_string(level) +
                                   " tier");
    }
    t_out = std::max(t_out, keep[b].size());
  }

  Tensor gathered({B, t_out, d});
  const auto& X = batch.data.value();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t j = 0; j < keep[b].size(); ++j)
      std::copy_n(X.data() + (b * T + keep[b][j]) * d, d, gathered.data() + (b * t_out + j) * d);

  SequenceBatch out;
  out.data = num::make_op(std::move(gathered), {batch.data},
                          [keep, T, t_out, d](num::Node& self) {
                            auto gx = num::grad_sink(self.parents[0]);
                            if (gx.empty()) return;
                            const auto g = self.value.grad();
                            for (std::size_t b = 0; b < keep.size(); ++b)
                              for (std::size_t j = 0; j < keep[b].size(); ++j)
                                for (std::size_t k = 0; k < d; ++k)
                                  gx[(b * T + keep[b][j]) * d + k] += g[(b * t_out + j) * d + k];
                          });
  for (std::size_t b = 0; b < B; ++b) out.lengths.push_back(keep[b].size());

  for (const auto& [upper, rows] : batch.tiers) {
    if (!seg::nests_under(level, upper)) continue;
    auto& out_rows = out.tiers[upper];
    for (std::size_t b = 0; b < B; ++b) {
      auto projected = seg::project_boundaries(batch.tier(level, b), batch.tier(upper, b));
      projected.bits.resize(t_out, 0);
      out_rows.push_back(std::move(projected.bits));
    }
  }
  return out;
}

SequenceBatch packager_forward(const SequenceBatch& batch, seg::Level level, PackMode mode,
                               const GruParams& p, num::Exec exec) {
  auto it = batch.tiers.find(level);
  if (it == batch.tiers.end()) {
    throw ConfigError("packager layer needs a " + seg::to_string(level) + " tier");
  }
  SequenceBatch hidden;
  hidden.data = gru_sequence(batch.data, batch.lengths, &it->second, p, exec);
  hidden.lengths = batch.lengths;
  hidden.tiers = batch.tiers;
  if (mode == PackMode::all) return hidden;
  return keep_segment_ends(hidden, level);
}

}  // namespace grupack::enc
