// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#include "came/losses.hpp"

#include <cmath>

#include "came/error.hpp"

namespace came {

const char* to_string(BaseLoss b) noexcept {
  switch (b) {
    case BaseLoss::ce: return "ce";
    case BaseLoss::focal: return "focal";
    case BaseLoss::ldam: return "ldam";
    case BaseLoss::class_balanced: return "class_balanced";
  }
  return "?";
}

BaseLoss base_loss_from_string(const std::string& s) {
  if (s == "ce") return BaseLoss::ce;
  if (s == "focal") return BaseLoss::focal;
  if (s == "ldam") return BaseLoss::ldam;
  if (s == "class_balanced") return BaseLoss::class_balanced;
  throw InvalidArgument("unknown base loss '" + s + "' (expected ce, focal, ldam or class_balanced)");
}

void LossConfig::validate() const {
  if (!(focal_gamma >= 0.0) || !std::isfinite(focal_gamma)) throw InvalidArgument("focal_gamma must be >= 0");
  if (!(ldam_c >= 0.0) || !std::isfinite(ldam_c)) throw InvalidArgument("ldam_c must be >= 0");
  if (!(cb_beta >= 0.0 && cb_beta < 1.0)) throw InvalidArgument("cb_beta must be in [0, 1)");
}

namespace {

void check_target(std::span<const double> logits, ClassId target) {
  if (logits.empty()) throw InvalidArgument("loss: empty logits");
  if (target >= logits.size())
    throw InvalidArgument("loss: target " + std::to_string(target) + " out of range for " +
                          std::to_string(logits.size()) + " classes");
}

void check_counts(std::span<const std::uint64_t> counts, std::size_t m) {
  if (counts.size() != m) throw InvalidArgument("loss: train_counts length differs from class count");
  for (std::size_t j = 0; j < counts.size(); ++j)
    if (counts[j] == 0) throw InvalidArgument("loss: class " + std::to_string(j) + " has zero training count");
}

LossValue weighted_ce(std::span<const double> logits, ClassId target, double weight) {
  LossValue out;
  out.loss = weight * (log_sum_exp(logits) - logits[target]);
  out.grad = stable_softmax(logits);
  out.grad[target] -= 1.0;
  if (weight != 1.0)
    for (double& g : out.grad) g *= weight;
  return out;
}

LossValue margin_ce(std::span<const double> logits, ClassId target, double margin) {
  if (margin == 0.0) return weighted_ce(logits, target, 1.0);
  Vector shifted(logits.begin(), logits.end());
  shifted[target] -= margin;
  return weighted_ce(shifted, target, 1.0);
}

}  // namespace

LossValue ce_loss(std::span<const double> logits, ClassId target) {
  check_target(logits, target);
  return weighted_ce(logits, target, 1.0);
}

LossValue focal_loss(std::span<const double> logits, ClassId target, double focal_gamma) {
  check_target(logits, target);
  if (!(focal_gamma >= 0.0)) throw InvalidArgument("focal_loss: gamma must be >= 0");
  if (focal_gamma == 0.0) return weighted_ce(logits, target, 1.0);
  const Vector p = stable_softmax(logits);
  const double pt = p[target];
  const double nll = log_sum_exp(logits) - logits[target];
  // 1 - p_t summed from the other classes keeps precision as p_t -> 1.
  double q = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j)
    if (j != target) q += p[j];
  const double mod = std::pow(q, focal_gamma);
  LossValue out;
  out.loss = mod * nll;
  // dL/dz_j = coef * (delta_jt - p_j), coef = p_t * dL/dp_t
  double coef = -mod;
  if (q > 0.0) coef -= focal_gamma * std::pow(q, focal_gamma - 1.0) * pt * nll;
  out.grad.resize(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) out.grad[j] = coef * ((j == target ? 1.0 : 0.0) - p[j]);
  return out;
}

Vector ldam_margins(std::span<const std::uint64_t> train_counts, double ldam_c) {
  check_counts(train_counts, train_counts.size());
  Vector d(train_counts.size());
  for (std::size_t j = 0; j < d.size(); ++j)
    d[j] = ldam_c / std::pow(static_cast<double>(train_counts[j]), 0.25);
  return d;
}

Vector class_balanced_weights(std::span<const std::uint64_t> train_counts, double cb_beta) {
  check_counts(train_counts, train_counts.size());
  if (!(cb_beta >= 0.0 && cb_beta < 1.0)) throw InvalidArgument("class_balanced: beta must be in [0, 1)");
  Vector w(train_counts.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    w[j] = (1.0 - cb_beta) / (1.0 - std::pow(cb_beta, static_cast<double>(train_counts[j])));
    sum += w[j];
  }
  const double scale = static_cast<double>(w.size()) / sum;
  for (double& v : w) v *= scale;
  return w;
}

LossValue ldam_loss(std::span<const double> logits, ClassId target,
                    std::span<const std::uint64_t> train_counts, double ldam_c) {
  check_target(logits, target);
  check_counts(train_counts, logits.size());
  return margin_ce(logits, target, ldam_margins(train_counts, ldam_c)[target]);
}

LossValue class_balanced_loss(std::span<const double> logits, ClassId target,
                              std::span<const std::uint64_t> train_counts, double cb_beta) {
  check_target(logits, target);
  check_counts(train_counts, logits.size());
  return weighted_ce(logits, target, class_balanced_weights(train_counts, cb_beta)[target]);
}

BaseLossFn::BaseLossFn(const LossConfig& cfg, std::span<const std::uint64_t> train_counts) : cfg_(cfg) {
  cfg_.validate();
  if (cfg_.base == BaseLoss::ldam) margins_ = ldam_margins(train_counts, cfg_.ldam_c);
  if (cfg_.base == BaseLoss::class_balanced) weights_ = class_balanced_weights(train_counts, cfg_.cb_beta);
}

LossValue BaseLossFn::operator()(std::span<const double> logits, ClassId target) const {
  check_target(logits, target);
  switch (cfg_.base) {
    case BaseLoss::ce: return weighted_ce(logits, target, 1.0);
    case BaseLoss::focal: return focal_loss(logits, target, cfg_.focal_gamma);
    case BaseLoss::ldam:
      if (margins_.size() != logits.size()) throw InvalidArgument("ldam: class count mismatch");
      return margin_ce(logits, target, margins_[target]);
    case BaseLoss::class_balanced:
      if (weights_.size() != logits.size()) throw InvalidArgument("class_balanced: class count mismatch");
      return weighted_ce(logits, target, weights_[target]);
  }
  throw InvalidArgument("unknown base loss");
}

ContextAwareLossValue context_aware_loss(std::span<const Vector> expert_logits,
                                         std::span<const double> beta, ClassId target,
                                         const BaseLossFn& base) {
  const std::size_t n = expert_logits.size();
  if (n == 0) throw InvalidArgument("context_aware_loss: no experts");
  if (beta.size() != n)
    throw InvalidArgument("context_aware_loss: beta has " + std::to_string(beta.size()) + " entries for " +
                          std::to_string(n) + " experts");
  double sum = 0.0;
  for (double b : beta) {
    if (!std::isfinite(b) || b < 0.0) throw InvalidArgument("context_aware_loss: beta entries must be in [0, 1]");
    sum += b;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw InvalidArgument("context_aware_loss: beta must sum to 1");
  ContextAwareLossValue out;
  out.expert_grads.reserve(n);
  out.beta_grad.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (expert_logits[i].size() != expert_logits[0].size())
      throw InvalidArgument("context_aware_loss: expert logit lengths differ");
    LossValue li = base(expert_logits[i], target);
    out.loss += beta[i] * li.loss;
    out.beta_grad[i] = li.loss;
    for (double& g : li.grad) g *= beta[i];
    out.expert_grads.push_back(std::move(li.grad));
  }
  return out;
}

ContextAwareLossValue context_aware_loss(std::span<const Vector> expert_logits,
                                         std::span<const double> beta, ClassId target,
                                         const LossConfig& cfg,
                                         std::span<const std::uint64_t> train_counts) {
  return context_aware_loss(expert_logits, beta, target, BaseLossFn(cfg, train_counts));
}

}  // namespace came
