// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace came {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. Biases are stored as (rows x 1).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  void fill(double v);
  bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// out = A x + b. `b` may be empty.
Vector affine(const Matrix& a, std::span<const double> x, const Matrix& b);
/// out = A^T y
Vector transpose_times(const Matrix& a, std::span<const double> y);
/// A += y x^T
void add_outer(Matrix& a, std::span<const double> y, std::span<const double> x);

/// Softmax with max subtraction. Throws InvalidArgument on empty or
/// non-finite input.
Vector stable_softmax(std::span<const double> logits);
double log_sum_exp(std::span<const double> logits);

/// Backward through softmax: given p = softmax(z) and dL/dp, returns dL/dz.
Vector softmax_backward(std::span<const double> p, std::span<const double> dp);

/// Central differences (f(x+h e_i) - f(x-h e_i)) / 2h per coordinate.
/// Throws EvaluationError carrying the coordinate when f is non-finite.
Vector finite_diff_gradient(const std::function<double(std::span<const double>)>& f,
                            std::span<const double> x, double h = 1e-5);

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double tolerance = 0.0;
  bool passed = true;
};

/// Per-coordinate relative error |a-n| / max(1e-6, |a|+|n|); reports the max.
/// The floor keeps coordinates whose gradient is at the finite-difference
/// roundoff level (eps * loss / step, around 1e-11) on an absolute scale.
GradientCheckReport check_gradients(std::span<const double> analytic,
                                    std::span<const double> numeric, double tol);

/// SplitMix64 step; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// xoshiro256** seeded through SplitMix64. Distributions are implemented
/// here (not via <random>) so draws are identical across standard libraries.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "xoshiro256**/splitmix64";

  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept;
  /// Standard normal via Box-Muller (no cached spare).
  double normal() noexcept;

  template <class T>
  void shuffle(std::vector<T>& v) noexcept {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
};

/// Allocate `total` across `weights` proportionally using largest remainder.
/// Ties in the remainder go to the lower index.
std::vector<std::size_t> apportion(std::span<const double> weights, std::size_t total);

}  // namespace came
