// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#include "came/model.hpp"

#include <cmath>

#include "came/error.hpp"

namespace came {

void CameConfig::validate() const {
  if (num_experts < 1 || num_experts > 8) throw InvalidArgument("num_experts must be in [1, 8]");
  if (hidden_dim < 1) throw InvalidArgument("hidden_dim must be positive");
  if (edge_dim < 1) throw InvalidArgument("edge_dim must be positive");
  if (!(pw_temperature >= 0.0 && pw_temperature <= 10.0))
    throw InvalidArgument("pw_temperature must be in [0, 10]");
  if (!(pw_aux_weight >= 0.0) || !std::isfinite(pw_aux_weight))
    throw InvalidArgument("pw_aux_weight must be a finite value >= 0");
}

CameParams CameParams::zeros(const CameConfig& cfg, std::size_t d_x, std::size_t d_c, std::size_t m) {
  cfg.validate();
  if (d_x == 0 || d_c == 0 || m == 0) throw InvalidArgument("model dimensions must be positive");
  const std::size_t h = cfg.hidden_dim, n = cfg.num_experts;
  CameParams p;
  p.shared_weight = Matrix(h, d_x);
  p.shared_bias = Matrix(h, 1);
  p.experts.assign(n, ExpertParams{Matrix(m, h), Matrix(m, 1)});
  p.gate_weight = Matrix(n, d_c);
  p.gate_bias = Matrix(n, 1);
  p.edge_weight = Matrix(cfg.edge_dim, h + d_c);
  p.edge_bias = Matrix(cfg.edge_dim, 1);
  p.rel_weight = Matrix(m * n, cfg.edge_dim);
  p.rel_bias = Matrix(m * n, 1);
  return p;
}

CameParams CameParams::initialize(const CameConfig& cfg, std::size_t d_x, std::size_t d_c,
                                  std::size_t m, std::uint64_t seed) {
  CameParams p = zeros(cfg, d_x, d_c, m);
  std::uint64_t stream = 0;
  auto fill = [&](Matrix& w, Matrix& b) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    Rng rng(mix_seed(seed, ++stream));
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
    for (double& v : b.data()) v = rng.uniform(-bound, bound);
  };
  fill(p.shared_weight, p.shared_bias);
  for (auto& e : p.experts) fill(e.weight, e.bias);
  fill(p.gate_weight, p.gate_bias);
  fill(p.edge_weight, p.edge_bias);
  fill(p.rel_weight, p.rel_bias);
  return p;
}

std::vector<CameParams::TensorRef> CameParams::tensors() {
  std::vector<TensorRef> out;
  out.push_back({"shared.weight", "shared", &shared_weight});
  out.push_back({"shared.bias", "shared", &shared_bias});
  for (std::size_t i = 0; i < experts.size(); ++i) {
    const std::string g = "expert." + std::to_string(i);
    out.push_back({g + ".weight", g, &experts[i].weight});
    out.push_back({g + ".bias", g, &experts[i].bias});
  }
  out.push_back({"gate.weight", "gate", &gate_weight});
  out.push_back({"gate.bias", "gate", &gate_bias});
  out.push_back({"edge.weight", "edge", &edge_weight});
  out.push_back({"edge.bias", "edge", &edge_bias});
  out.push_back({"rel_gate.weight", "rel_gate", &rel_weight});
  out.push_back({"rel_gate.bias", "rel_gate", &rel_bias});
  return out;
}

std::vector<CameParams::ConstTensorRef> CameParams::tensors() const {
  std::vector<ConstTensorRef> out;
  for (auto& t : const_cast<CameParams*>(this)->tensors()) out.push_back({t.name, t.group, t.tensor});
  return out;
}

std::size_t CameParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.tensor->size();
  return n;
}

Vector CameParams::flatten() const {
  Vector flat;
  flat.reserve(parameter_count());
  for (const auto& t : tensors()) flat.insert(flat.end(), t.tensor->data().begin(), t.tensor->data().end());
  return flat;
}

void CameParams::unflatten(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw InvalidArgument("unflatten: size mismatch");
  std::size_t pos = 0;
  for (auto& t : tensors()) {
    auto d = t.tensor->data();
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
              flat.begin() + static_cast<std::ptrdiff_t>(pos + d.size()), d.begin());
    pos += d.size();
  }
}

bool is_predicate_weighting_group(const std::string& group) noexcept {
  return group == "edge" || group == "rel_gate";
}

Vector shared_forward(const CameParams& p, Activation act, std::span<const double> x) {
  if (x.size() != p.input_dim())
    throw InvalidArgument("pair feature has " + std::to_string(x.size()) + " entries, model expects " +
                          std::to_string(p.input_dim()));
  Vector y = affine(p.shared_weight, x, p.shared_bias);
  if (act == Activation::tanh)
    for (double& v : y) v = std::tanh(v);
  return y;
}

Vector expert_forward(const CameParams& p, std::span<const double> y_s, std::size_t expert) {
  if (expert >= p.num_experts())
    throw InvalidArgument("expert index " + std::to_string(expert) + " out of range [0, " +
                          std::to_string(p.num_experts()) + ")");
  const auto& e = p.experts[expert];
  return affine(e.weight, y_s, e.bias);
}

Vector moe_average(std::span<const Vector> expert_logits) {
  if (expert_logits.empty()) throw InvalidArgument("moe_average: no experts");
  const std::size_t m = expert_logits[0].size();
  Vector out(m, 0.0);
  for (const auto& y : expert_logits) {
    if (y.size() != m) throw InvalidArgument("moe_average: expert logit lengths differ");
    for (std::size_t j = 0; j < m; ++j) out[j] += y[j];
  }
  const double n = static_cast<double>(expert_logits.size());
  for (double& v : out) v /= n;
  return out;
}

Vector expert_weights(const CameParams& p, std::span<const double> c) {
  if (c.size() != p.context_dim())
    throw InvalidArgument("context feature has " + std::to_string(c.size()) + " entries, model expects " +
                          std::to_string(p.context_dim()));
  return stable_softmax(affine(p.gate_weight, c, p.gate_bias));
}

Vector edge_embedding(const CameParams& p, std::span<const double> y_s, std::span<const double> c) {
  Vector u(y_s.begin(), y_s.end());
  u.insert(u.end(), c.begin(), c.end());
  if (u.size() != p.edge_weight.cols()) throw InvalidArgument("edge_embedding: shape mismatch");
  return affine(p.edge_weight, u, p.edge_bias);
}

namespace {

Matrix reshape_scores(const Vector& s, std::size_t m, std::size_t n) {
  Matrix out(m, n);
  std::copy(s.begin(), s.end(), out.data().begin());
  return out;
}

Matrix rowwise_softmax(const Matrix& scores, double temperature) {
  Matrix r(scores.rows(), scores.cols());
  Vector row(scores.cols());
  for (std::size_t j = 0; j < scores.rows(); ++j) {
    for (std::size_t i = 0; i < scores.cols(); ++i) row[i] = temperature * scores(j, i);
    const Vector p = stable_softmax(row);
    for (std::size_t i = 0; i < scores.cols(); ++i) r(j, i) = p[i];
  }
  return r;
}

}  // namespace

Matrix predicate_weights(const CameParams& p, std::span<const double> y_e, double temperature) {
  if (!(temperature >= 0.0)) throw InvalidArgument("predicate_weights: temperature must be >= 0");
  if (y_e.size() != p.rel_weight.cols()) throw InvalidArgument("predicate_weights: edge embedding shape mismatch");
  const Vector s = affine(p.rel_weight, y_e, p.rel_bias);
  return rowwise_softmax(reshape_scores(s, p.num_classes(), p.num_experts()), temperature);
}

Vector came_ensemble(std::span<const Vector> expert_logits, const Matrix& r) {
  const std::size_t n = expert_logits.size();
  if (n == 0) throw InvalidArgument("came_ensemble: no experts");
  const std::size_t m = expert_logits[0].size();
  if (r.rows() != m || r.cols() != n)
    throw InvalidArgument("came_ensemble: weights are " + std::to_string(r.rows()) + "x" +
                          std::to_string(r.cols()) + ", expected " + std::to_string(m) + "x" +
                          std::to_string(n));
  Vector out(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (expert_logits[i].size() != m) throw InvalidArgument("came_ensemble: expert logit lengths differ");
    for (std::size_t j = 0; j < m; ++j) out[j] += r(j, i) * expert_logits[i][j];
  }
  for (double& v : out) v /= static_cast<double>(n);
  return out;
}

ForwardTrace forward(const CameParams& p, const CameConfig& cfg, std::span<const double> x,
                     std::span<const double> c) {
  const std::size_t n = p.num_experts(), m = p.num_classes();
  if (n != cfg.num_experts) throw InvalidArgument("forward: parameters do not match the expert count");
  if (c.size() != p.context_dim())
    throw InvalidArgument("context feature has " + std::to_string(c.size()) + " entries, model expects " +
                          std::to_string(p.context_dim()));
  ForwardTrace t;
  t.y_s = shared_forward(p, cfg.activation, x);
  t.expert_logits.reserve(n);
  for (std::size_t i = 0; i < n; ++i) t.expert_logits.push_back(expert_forward(p, t.y_s, i));

  if (cfg.ew_enabled) {
    t.gate_logits = affine(p.gate_weight, c, p.gate_bias);
    t.beta = stable_softmax(t.gate_logits);
  } else {
    t.beta.assign(n, 1.0 / static_cast<double>(n));
  }

  if (cfg.pw_enabled) {
    t.y_e = edge_embedding(p, t.y_s, c);
    t.rel_scores = reshape_scores(affine(p.rel_weight, t.y_e, p.rel_bias), m, n);
    t.r = rowwise_softmax(t.rel_scores, cfg.pw_temperature);
  } else {
    t.r = Matrix(m, n, 1.0 / static_cast<double>(n));
  }

  t.y_moe = moe_average(t.expert_logits);
  if (cfg.ew_enabled) {
    t.y_ew.assign(m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) t.y_ew[j] += t.beta[i] * t.expert_logits[i][j];
  }
  t.y_came = came_ensemble(t.expert_logits, t.r);
  return t;
}

const Vector& inference_logits(const ForwardTrace& t, const CameConfig& cfg) noexcept {
  if (cfg.pw_enabled) return t.y_came;
  return cfg.ew_enabled ? t.y_ew : t.y_moe;
}

void backward(const CameParams& p, const CameConfig& cfg, std::span<const double> x,
              std::span<const double> c, const ForwardTrace& t, const BackwardSeed& seed,
              CameParams& g) {
  const std::size_t n = p.num_experts(), m = p.num_classes(), h = p.hidden_dim();
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<Vector> d_logits(n, Vector(m, 0.0));
  if (!seed.d_expert_logits.empty()) {
    if (seed.d_expert_logits.size() != n) throw InvalidArgument("backward: expert gradient count mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      if (seed.d_expert_logits[i].size() != m) throw InvalidArgument("backward: expert gradient length mismatch");
      d_logits[i] = seed.d_expert_logits[i];
    }
  }

  Vector d_ys(h, 0.0);

  if (!seed.d_came.empty()) {
    if (seed.d_came.size() != m) throw InvalidArgument("backward: ensemble gradient length mismatch");
    Matrix d_r(m, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        d_logits[i][j] += inv_n * t.r(j, i) * seed.d_came[j];
        d_r(j, i) = inv_n * t.expert_logits[i][j] * seed.d_came[j];
      }
    if (cfg.pw_enabled) {
      Vector d_scores(m * n);
      for (std::size_t j = 0; j < m; ++j) {
        const Vector dz = softmax_backward(t.r.row(j), d_r.row(j));
        for (std::size_t i = 0; i < n; ++i) d_scores[j * n + i] = cfg.pw_temperature * dz[i];
      }
      add_outer(g.rel_weight, d_scores, t.y_e);
      for (std::size_t k = 0; k < d_scores.size(); ++k) g.rel_bias.data()[k] += d_scores[k];
      const Vector d_ye = transpose_times(p.rel_weight, d_scores);
      Vector u(t.y_s.begin(), t.y_s.end());
      u.insert(u.end(), c.begin(), c.end());
      add_outer(g.edge_weight, d_ye, u);
      for (std::size_t k = 0; k < d_ye.size(); ++k) g.edge_bias.data()[k] += d_ye[k];
      const Vector d_u = transpose_times(p.edge_weight, d_ye);
      for (std::size_t k = 0; k < h; ++k) d_ys[k] += d_u[k];
    }
  }

  if (cfg.ew_enabled && !seed.d_beta.empty()) {
    if (seed.d_beta.size() != n) throw InvalidArgument("backward: beta gradient length mismatch");
    const Vector d_gate = softmax_backward(t.beta, seed.d_beta);
    add_outer(g.gate_weight, d_gate, c);
    for (std::size_t i = 0; i < n; ++i) g.gate_bias.data()[i] += d_gate[i];
  }

  for (std::size_t i = 0; i < n; ++i) {
    add_outer(g.experts[i].weight, d_logits[i], t.y_s);
    for (std::size_t j = 0; j < m; ++j) g.experts[i].bias.data()[j] += d_logits[i][j];
    const Vector back = transpose_times(p.experts[i].weight, d_logits[i]);
    for (std::size_t k = 0; k < h; ++k) d_ys[k] += back[k];
  }

  Vector d_pre = d_ys;
  if (cfg.activation == Activation::tanh)
    for (std::size_t k = 0; k < h; ++k) d_pre[k] *= 1.0 - t.y_s[k] * t.y_s[k];
  add_outer(g.shared_weight, d_pre, x);
  for (std::size_t k = 0; k < h; ++k) g.shared_bias.data()[k] += d_pre[k];
}

}  // namespace came
