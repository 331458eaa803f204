// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "came/numerics.hpp"
#include "temp_dir.hpp"

namespace came::testing {

inline Vector random_vector(Rng& rng, std::size_t n, double scale = 1.0) {
  Vector v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

inline std::vector<std::uint64_t> random_counts(Rng& rng, std::size_t m, std::uint64_t max = 500) {
  std::vector<std::uint64_t> c(m);
  for (auto& x : c) x = 1 + rng.below(max);
  return c;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace came::testing
