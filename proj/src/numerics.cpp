// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#include "came/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "came/error.hpp"

namespace came {

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Vector affine(const Matrix& a, std::span<const double> x, const Matrix& b) {
  if (x.size() != a.cols())
    throw InvalidArgument("affine: input has " + std::to_string(x.size()) + " entries, expected " +
                          std::to_string(a.cols()));
  if (b.size() != 0 && b.size() != a.rows()) throw InvalidArgument("affine: bias shape mismatch");
  Vector out(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double acc = b.size() ? b.data()[r] : 0.0;
    auto row = a.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * x[c];
    out[r] = acc;
  }
  return out;
}

Vector transpose_times(const Matrix& a, std::span<const double> y) {
  if (y.size() != a.rows()) throw InvalidArgument("transpose_times: shape mismatch");
  Vector out(a.cols(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    auto row = a.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) out[c] += row[c] * yr;
  }
  return out;
}

void add_outer(Matrix& a, std::span<const double> y, std::span<const double> x) {
  if (y.size() != a.rows() || x.size() != a.cols())
    throw InvalidArgument("add_outer: shape mismatch");
  auto d = a.data();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    double* row = d.data() + r * a.cols();
    for (std::size_t c = 0; c < x.size(); ++c) row[c] += yr * x[c];
  }
}

namespace {

void require_finite_nonempty(std::span<const double> v, const char* who) {
  if (v.empty()) throw InvalidArgument(std::string(who) + ": empty input");
  for (double x : v)
    if (!std::isfinite(x)) throw InvalidArgument(std::string(who) + ": non-finite input");
}

}  // namespace

Vector stable_softmax(std::span<const double> logits) {
  require_finite_nonempty(logits, "stable_softmax");
  const double mx = *std::max_element(logits.begin(), logits.end());
  Vector out(logits.size());
  double denom = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    denom += out[i];
  }
  for (double& v : out) v /= denom;
  return out;
}

double log_sum_exp(std::span<const double> logits) {
  require_finite_nonempty(logits, "log_sum_exp");
  if (logits.size() == 1) return logits[0];
  const double mx = *std::max_element(logits.begin(), logits.end());
  double acc = 0.0;
  for (double v : logits) acc += std::exp(v - mx);
  return mx + std::log(acc);
}

Vector softmax_backward(std::span<const double> p, std::span<const double> dp) {
  if (p.size() != dp.size()) throw InvalidArgument("softmax_backward: length mismatch");
  double dot = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) dot += p[i] * dp[i];
  Vector dz(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) dz[i] = p[i] * (dp[i] - dot);
  return dz;
}

Vector finite_diff_gradient(const std::function<double(std::span<const double>)>& f,
                            std::span<const double> x, double h) {
  if (!(h > 0.0)) throw InvalidArgument("finite_diff_gradient: step must be positive");
  Vector probe(x.begin(), x.end());
  Vector grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double fp = f(probe);
    probe[i] = orig - h;
    const double fm = f(probe);
    probe[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw EvaluationError("non-finite function value at coordinate " + std::to_string(i), i);
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

GradientCheckReport check_gradients(std::span<const double> analytic,
                                    std::span<const double> numeric, double tol) {
  if (analytic.size() != numeric.size())
    throw InvalidArgument("check_gradients: length mismatch");
  GradientCheckReport rep;
  rep.tolerance = tol;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i], n = numeric[i];
    const double err = std::abs(a - n) / std::max(1e-6, std::abs(a) + std::abs(n));
    if (!(err <= rep.max_relative_error)) {
      rep.max_relative_error = err;
      rep.worst_index = i;
    }
  }
  rep.passed = rep.max_relative_error < tol;
  return rep;
}

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t s = seed ^ (stream * 0xD1B54A32D192ED03ULL);
  splitmix64(s);
  return splitmix64(s);
}

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t st = seed;
  for (auto& w : s_) w = splitmix64(st);
}

std::uint64_t Rng::next_u64() noexcept {
  const auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) noexcept {
  // Lemire-style rejection keeps the draw unbiased.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

double Rng::normal() noexcept {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<std::size_t> apportion(std::span<const double> weights, std::size_t total) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (weights.empty() || !(sum > 0.0)) throw InvalidArgument("apportion: weights must have positive sum");
  std::vector<std::size_t> out(weights.size());
  std::vector<double> rem(weights.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(total) * weights[i] / sum;
    out[i] = static_cast<std::size_t>(std::floor(exact));
    rem[i] = exact - static_cast<double>(out[i]);
    assigned += out[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[order[k % order.size()]];
  return out;
}

}  // namespace came
