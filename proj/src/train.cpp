// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#include "came/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "came/error.hpp"

namespace came {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw InvalidArgument("learning_rate must be positive");
  if (!(warmup_factor > 0.0 && warmup_factor <= 1.0)) throw InvalidArgument("warmup_factor must be in (0, 1]");
  if (!(weight_decay >= 0.0)) throw InvalidArgument("weight_decay must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must be in [0, 1)");
  if (!(grad_clip_norm > 0.0)) throw InvalidArgument("grad_clip_norm must be positive");
  if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
}

double warmup_lr(std::uint64_t step, const TrainConfig& cfg) {
  if (step >= cfg.warmup_steps) return cfg.learning_rate;
  const double alpha = static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  return cfg.learning_rate * (cfg.warmup_factor * (1.0 - alpha) + alpha);
}

ClipResult clip_grad_norm(std::span<const std::span<double>> groups, std::span<const std::string> names,
                          double max_norm) {
  if (!(max_norm > 0.0)) throw InvalidArgument("clip_grad_norm: max_norm must be positive");
  double sq = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (double v : groups[g]) {
      if (!std::isfinite(v))
        throw TrainingError("non-finite gradient in '" + (g < names.size() ? names[g] : std::to_string(g)) + "'", -1);
      sq += v * v;
    }
  ClipResult out;
  out.norm = std::sqrt(sq);
  if (out.norm > max_norm) {
    const double scale = max_norm / out.norm;
    for (auto grp : groups)
      for (double& v : grp) v *= scale;
    out.clipped = true;
  }
  return out;
}

ClipResult clip_grad_norm(CameParams& grads, double max_norm) {
  std::vector<std::span<double>> groups;
  std::vector<std::string> names;
  for (auto& t : grads.tensors()) {
    groups.push_back(t.tensor->data());
    names.push_back(t.name);
  }
  return clip_grad_norm(groups, names, max_norm);
}

void sgd_step(CameParams& params, const CameParams& grads, OptimizerState& state, const TrainConfig& cfg) {
  auto pt = params.tensors();
  const auto gt = grads.tensors();
  auto vt = state.velocity.tensors();
  if (pt.size() != gt.size() || pt.size() != vt.size()) throw InvalidArgument("sgd_step: tensor count mismatch");
  const double lr = warmup_lr(state.step, cfg);
  for (std::size_t k = 0; k < pt.size(); ++k) {
    if (!pt[k].tensor->same_shape(*gt[k].tensor) || !pt[k].tensor->same_shape(*vt[k].tensor))
      throw InvalidArgument("sgd_step: shape mismatch in '" + pt[k].name + "'");
    auto p = pt[k].tensor->data();
    auto g = gt[k].tensor->data();
    auto v = vt[k].tensor->data();
    for (std::size_t e = 0; e < p.size(); ++e) {
      const double gd = g[e] + cfg.weight_decay * p[e];
      v[e] = cfg.momentum * v[e] + gd;
      p[e] -= lr * v[e];
    }
  }
  ++state.step;
}

CameParams initial_params(const DatasetSplit& ds, const CameConfig& came, const TrainConfig& train) {
  return CameParams::initialize(came, ds.d_x, ds.d_c, ds.vocabulary.size(), mix_seed(train.seed, 0x1417));
}

BatchGradient batch_gradient(const CameParams& params, const CameConfig& came, const BaseLossFn& loss,
                             std::span<const RelationInstance* const> batch) {
  BatchGradient out;
  out.grads = CameParams::zeros(came, params.input_dim(), params.context_dim(), params.num_classes());
  if (batch.empty()) return out;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const bool aux = came.pw_enabled && came.pw_aux_weight > 0.0;
  CameParams aux_grads;
  if (aux) aux_grads = out.grads;
  for (const RelationInstance* inst : batch) {
    const ForwardTrace t = forward(params, came, inst->x, inst->c);
    auto ca = context_aware_loss(t.expert_logits, t.beta, inst->label, loss);
    out.loss += ca.loss * inv_b;
    BackwardSeed seed;
    seed.d_expert_logits = std::move(ca.expert_grads);
    for (auto& g : seed.d_expert_logits)
      for (double& v : g) v *= inv_b;
    seed.d_beta = std::move(ca.beta_grad);
    for (double& v : seed.d_beta) v *= inv_b;
    backward(params, came, inst->x, inst->c, t, seed, out.grads);
    if (aux) {
      // The ensemble loss trains only the edge and predicate-weighting tensors.
      LossValue lv = loss(t.y_came, inst->label);
      out.aux_loss += lv.loss * inv_b;
      BackwardSeed aseed;
      aseed.d_came = std::move(lv.grad);
      for (double& v : aseed.d_came) v *= came.pw_aux_weight * inv_b;
      backward(params, came, inst->x, inst->c, t, aseed, aux_grads);
    }
  }
  if (aux) {
    auto dst = out.grads.tensors();
    const auto src = std::as_const(aux_grads).tensors();
    for (std::size_t k = 0; k < dst.size(); ++k) {
      if (!is_predicate_weighting_group(dst[k].group)) continue;
      auto d = dst[k].tensor->data();
      auto s = src[k].tensor->data();
      for (std::size_t e = 0; e < d.size(); ++e) d[e] += s[e];
    }
  }
  return out;
}

FitResult fit(const DatasetSplit& ds, const CameConfig& came, const LossConfig& loss, const TrainConfig& train,
              const FitOptions& opts) {
  CameParams params = initial_params(ds, came, train);
  TrainState state;
  state.optimizer.velocity =
      CameParams::zeros(came, ds.d_x, ds.d_c, ds.vocabulary.size());
  return resume_fit(ds, came, loss, train, std::move(params), std::move(state), opts);
}

FitResult resume_fit(const DatasetSplit& ds, const CameConfig& came, const LossConfig& loss,
                     const TrainConfig& train, CameParams params, TrainState state, const FitOptions& opts) {
  came.validate();
  loss.validate();
  train.validate();
  if (ds.train.empty()) throw InvalidArgument("fit: empty training set");
  if (params.input_dim() != ds.d_x || params.context_dim() != ds.d_c ||
      params.num_classes() != ds.vocabulary.size() || params.num_experts() != came.num_experts)
    throw InvalidArgument("fit: parameters do not match dataset dimensions or expert count");
  if (state.epochs_completed > train.epochs)
    throw InvalidArgument("fit: checkpoint has more completed epochs than requested");

  const BaseLossFn loss_fn(loss, ds.vocabulary.train_counts);

  std::vector<RelationInstance> canon = ds.train;
  canonical_sort(canon);

  FitResult out;
  for (std::size_t epoch = state.epochs_completed; epoch < train.epochs; ++epoch) {
    std::vector<std::size_t> order(canon.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(train.seed, 0x10000 + epoch));
    rng.shuffle(order);

    double loss_sum = 0.0, aux_sum = 0.0;
    std::size_t batches = 0;
    std::vector<const RelationInstance*> batch;
    for (std::size_t start = 0; start < order.size(); start += train.batch_size) {
      batch.clear();
      for (std::size_t k = start; k < std::min(order.size(), start + train.batch_size); ++k)
        batch.push_back(&canon[order[k]]);
      if (batch.empty()) {
        out.warnings.push_back("skipped empty batch at step " + std::to_string(state.optimizer.step));
        continue;
      }
      const auto step = static_cast<long long>(state.optimizer.step);
      BatchGradient bg;
      try {
        bg = batch_gradient(params, came, loss_fn, batch);
      } catch (const InvalidArgument& e) {
        // Overflowing activations surface here as non-finite softmax input.
        throw TrainingError(std::string(e.what()) + " at step " + std::to_string(step), step);
      }
      if (!std::isfinite(bg.loss) || !std::isfinite(bg.aux_loss))
        throw TrainingError("loss became non-finite at step " + std::to_string(step), step);
      try {
        clip_grad_norm(bg.grads, train.grad_clip_norm);
      } catch (const TrainingError& e) {
        throw TrainingError(std::string(e.what()) + " at step " + std::to_string(step), step);
      }
      sgd_step(params, bg.grads, state.optimizer, train);
      loss_sum += bg.loss;
      aux_sum += bg.aux_loss;
      ++batches;
    }
    for (const auto& t : params.tensors())
      if (!t.tensor->all_finite())
        throw TrainingError("parameter '" + t.name + "' became non-finite", static_cast<long long>(state.optimizer.step));
    state.epochs_completed = epoch + 1;

    EpochLog entry;
    entry.epoch = epoch + 1;
    entry.step = state.optimizer.step;
    entry.lr = warmup_lr(state.optimizer.step, train);
    entry.train_loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
    entry.aux_loss = batches ? aux_sum / static_cast<double>(batches) : 0.0;
    if (opts.evaluate_val && !ds.val.empty() && ds.vocabulary.size() >= 3)
      entry.val = evaluate(params, came, ds.val, opts.eval_ks, ds.vocabulary, opts.graph_constraint);
    if (opts.on_epoch) opts.on_epoch(entry);
    out.log.push_back(std::move(entry));
  }
  out.params = std::move(params);
  out.state = std::move(state);
  return out;
}

}  // namespace came
