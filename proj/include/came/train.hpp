// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "came/data.hpp"
#include "came/losses.hpp"
#include "came/metrics.hpp"
#include "came/model.hpp"

namespace came {

struct TrainConfig {
  double learning_rate = 0.01;
  double warmup_factor = 0.1;
  std::size_t warmup_steps = 500;
  double weight_decay = 1e-4;
  double momentum = 0.9;
  double grad_clip_norm = 5.0;
  std::size_t batch_size = 12;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Momentum buffers mirror the parameter shapes.
struct OptimizerState {
  CameParams velocity;
  std::uint64_t step = 0;
  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

/// Linear ramp from warmup_factor * lr at step 0 to lr at warmup_steps.
double warmup_lr(std::uint64_t step, const TrainConfig& cfg);

struct ClipResult {
  double norm = 0.0;  // before clipping
  bool clipped = false;
};

/// Scales all groups by max_norm / g when the global L2 norm g exceeds
/// max_norm. Throws TrainingError naming the first non-finite group.
ClipResult clip_grad_norm(std::span<const std::span<double>> groups, std::span<const std::string> names,
                          double max_norm);
ClipResult clip_grad_norm(CameParams& grads, double max_norm);

/// g' = g + wd p; v = momentum v + g'; p -= lr(step) v; ++step.
void sgd_step(CameParams& params, const CameParams& grads, OptimizerState& state, const TrainConfig& cfg);

struct TrainState {
  std::size_t epochs_completed = 0;
  OptimizerState optimizer;
  friend bool operator==(const TrainState&, const TrainState&) = default;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  std::uint64_t step = 0;
  double lr = 0.0;
  double train_loss = 0.0;     // context-aware loss, batch mean, averaged over the epoch
  double aux_loss = 0.0;       // ensemble loss feeding the predicate-weighting gate
  std::optional<EvalReport> val;
};

struct FitOptions {
  std::vector<std::size_t> eval_ks{5, 10, 20};
  bool graph_constraint = true;
  bool evaluate_val = true;
  std::function<void(const EpochLog&)> on_epoch;
};

struct FitResult {
  CameParams params;
  TrainState state;
  std::vector<EpochLog> log;
  std::vector<std::string> warnings;
};

/// Parameters as initialized by fit for this configuration.
CameParams initial_params(const DatasetSplit& ds, const CameConfig& came, const TrainConfig& train);

/// Mean loss and accumulated gradient for one minibatch (exposed for tests).
struct BatchGradient {
  double loss = 0.0;
  double aux_loss = 0.0;
  CameParams grads;
};
BatchGradient batch_gradient(const CameParams& params, const CameConfig& came, const BaseLossFn& loss,
                             std::span<const RelationInstance* const> batch);

FitResult fit(const DatasetSplit& ds, const CameConfig& came, const LossConfig& loss, const TrainConfig& train,
              const FitOptions& opts = {});

/// Continue training from `params`/`state` up to train.epochs total epochs.
FitResult resume_fit(const DatasetSplit& ds, const CameConfig& came, const LossConfig& loss,
                     const TrainConfig& train, CameParams params, TrainState state,
                     const FitOptions& opts = {});

}  // namespace came
