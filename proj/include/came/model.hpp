// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "came/numerics.hpp"

namespace came {

enum class Activation : std::uint8_t { tanh = 0, identity = 1 };

struct CameConfig {
  std::size_t num_experts = 3;
  std::size_t hidden_dim = 32;
  /// Width of the edge-context embedding fed to the predicate-weighting gate.
  std::size_t edge_dim = 16;
  /// Temperature on the predicate-weighting scores; 0 gives uniform weights.
  double pw_temperature = 0.25;
  bool ew_enabled = true;
  bool pw_enabled = true;
  Activation activation = Activation::tanh;
  /// Weight of the base loss on the ensemble output, routed only to the
  /// edge and predicate-weighting parameters.
  double pw_aux_weight = 1.0;

  void validate() const;
  friend bool operator==(const CameConfig&, const CameConfig&) = default;
};

struct ExpertParams {
  Matrix weight;  // m x hidden
  Matrix bias;    // m x 1
  friend bool operator==(const ExpertParams&, const ExpertParams&) = default;
};

/// All trainable tensors. Also used, zero-initialized, as a gradient buffer.
struct CameParams {
  Matrix shared_weight;  // hidden x d_x
  Matrix shared_bias;    // hidden x 1
  std::vector<ExpertParams> experts;
  Matrix gate_weight;    // n x d_c
  Matrix gate_bias;      // n x 1
  Matrix edge_weight;    // edge_dim x (hidden + d_c)
  Matrix edge_bias;      // edge_dim x 1
  Matrix rel_weight;     // (m * n) x edge_dim, row j * n + i scores predicate j on expert i
  Matrix rel_bias;       // (m * n) x 1

  std::size_t num_experts() const noexcept { return experts.size(); }
  std::size_t input_dim() const noexcept { return shared_weight.cols(); }
  std::size_t context_dim() const noexcept { return gate_weight.cols(); }
  std::size_t hidden_dim() const noexcept { return shared_weight.rows(); }
  std::size_t num_classes() const noexcept { return experts.empty() ? 0 : experts[0].weight.rows(); }

  static CameParams zeros(const CameConfig& cfg, std::size_t d_x, std::size_t d_c, std::size_t m);
  /// Uniform in +-1/sqrt(fan_in); every tensor draws from its own stream of `seed`.
  static CameParams initialize(const CameConfig& cfg, std::size_t d_x, std::size_t d_c,
                               std::size_t m, std::uint64_t seed);

  struct TensorRef {
    std::string name;
    /// Parameter group: "shared", "expert.<i>", "gate", "edge" or "rel_gate".
    std::string group;
    Matrix* tensor;
  };
  struct ConstTensorRef {
    std::string name;
    std::string group;
    const Matrix* tensor;
  };
  std::vector<TensorRef> tensors();
  std::vector<ConstTensorRef> tensors() const;

  std::size_t parameter_count() const;
  Vector flatten() const;
  void unflatten(std::span<const double> flat);

  friend bool operator==(const CameParams&, const CameParams&) = default;
};

/// Activations of one forward pass.
struct ForwardTrace {
  Vector y_s;
  Vector y_e;
  std::vector<Vector> expert_logits;  // n vectors of length m
  Vector gate_logits;
  Vector beta;
  Matrix rel_scores;  // m x n, before temperature
  Matrix r;           // m x n, rows sum to 1
  Vector y_moe;
  Vector y_ew;  // sum_i beta_i * y_i; filled only when expert weighting is on
  Vector y_came;
};

Vector shared_forward(const CameParams& p, Activation act, std::span<const double> x);
Vector expert_forward(const CameParams& p, std::span<const double> y_s, std::size_t expert);
Vector moe_average(std::span<const Vector> expert_logits);
/// softmax(W_context c + b)
Vector expert_weights(const CameParams& p, std::span<const double> c);
/// affine(y_s ++ c)
Vector edge_embedding(const CameParams& p, std::span<const double> y_s, std::span<const double> c);
/// Row j: softmax over experts of temperature * scores_j. Returns m x n.
Matrix predicate_weights(const CameParams& p, std::span<const double> y_e, double temperature);
/// (1/n) sum_i r[:, i] * y_i
Vector came_ensemble(std::span<const Vector> expert_logits, const Matrix& r);

ForwardTrace forward(const CameParams& p, const CameConfig& cfg, std::span<const double> x,
                     std::span<const double> c);

/// Logits used for ranking: y_came when predicate weighting is on, otherwise
/// the beta-weighted expert sum when expert weighting is on, otherwise y_moe.
const Vector& inference_logits(const ForwardTrace& t, const CameConfig& cfg) noexcept;

/// Upstream gradients entering the backward pass. Empty members count as zero.
struct BackwardSeed {
  std::vector<Vector> d_expert_logits;
  Vector d_beta;
  Vector d_came;
};

/// Accumulates dL/dparams into `grads` (same shapes as `p`).
void backward(const CameParams& p, const CameConfig& cfg, std::span<const double> x,
              std::span<const double> c, const ForwardTrace& trace, const BackwardSeed& seed,
              CameParams& grads);

/// True for tensors reached only through the predicate-weighting path.
bool is_predicate_weighting_group(const std::string& group) noexcept;

}  // namespace came
