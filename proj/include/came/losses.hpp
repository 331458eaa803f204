// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "came/data.hpp"
#include "came/numerics.hpp"

namespace came {

enum class BaseLoss : std::uint8_t { ce = 0, focal = 1, ldam = 2, class_balanced = 3 };
const char* to_string(BaseLoss b) noexcept;
BaseLoss base_loss_from_string(const std::string& s);

struct LossConfig {
  BaseLoss base = BaseLoss::ce;
  double focal_gamma = 2.0;
  double ldam_c = 0.5;
  double cb_beta = 0.999;

  void validate() const;
  friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

struct LossValue {
  double loss = 0.0;
  Vector grad;  // d loss / d logits
};

LossValue ce_loss(std::span<const double> logits, ClassId target);
/// (1 - p_t)^gamma * (-log p_t)
LossValue focal_loss(std::span<const double> logits, ClassId target, double focal_gamma);
/// CE with logits[target] lowered by C / n_target^(1/4).
LossValue ldam_loss(std::span<const double> logits, ClassId target,
                    std::span<const std::uint64_t> train_counts, double ldam_c);
/// w_target * CE with effective-number weights normalized to mean 1.
LossValue class_balanced_loss(std::span<const double> logits, ClassId target,
                              std::span<const std::uint64_t> train_counts, double cb_beta);

Vector ldam_margins(std::span<const std::uint64_t> train_counts, double ldam_c);
Vector class_balanced_weights(std::span<const std::uint64_t> train_counts, double cb_beta);

/// A base loss with its per-class margins/weights computed once.
class BaseLossFn {
 public:
  BaseLossFn(const LossConfig& cfg, std::span<const std::uint64_t> train_counts);
  LossValue operator()(std::span<const double> logits, ClassId target) const;
  const LossConfig& config() const noexcept { return cfg_; }

 private:
  LossConfig cfg_;
  Vector margins_;
  Vector weights_;
};

struct ContextAwareLossValue {
  double loss = 0.0;
  /// beta_i * dL_base(y_i)/dy_i for every expert.
  std::vector<Vector> expert_grads;
  /// dL/dbeta_i = L_base(y_i); chained through the gate softmax by the model.
  Vector beta_grad;
};

/// sum_i beta_i * L_base(y_i, target)
ContextAwareLossValue context_aware_loss(std::span<const Vector> expert_logits,
                                         std::span<const double> beta, ClassId target,
                                         const BaseLossFn& base);
ContextAwareLossValue context_aware_loss(std::span<const Vector> expert_logits,
                                         std::span<const double> beta, ClassId target,
                                         const LossConfig& cfg,
                                         std::span<const std::uint64_t> train_counts);

}  // namespace came
