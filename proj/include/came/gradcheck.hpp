// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "came/config.hpp"

namespace came {

struct GradcheckEntry {
  std::string check;  // e.g. "loss.focal", "came.ldam", "came.ensemble"
  std::string group;  // parameter group or "logits"
  double max_relative_error = 0.0;
  std::size_t points = 0;
  bool passed = true;
};

struct GradcheckResult {
  std::vector<GradcheckEntry> entries;
  double tolerance = 0.0;
  bool passed = true;

  std::vector<std::string> failing() const;
  std::string to_text() const;
};

/// Finite-difference validation of every analytic gradient path:
///  - each base loss w.r.t. logits,
///  - the context-aware loss through the full model, per base loss,
///  - the base loss of the ensemble output through the full model.
/// `model` selects expert count and enabled gates; dimensions come from `opts`.
GradcheckResult run_gradcheck(const GradcheckConfig& opts, const CameConfig& model, std::uint64_t seed);

}  // namespace came
