// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "came/config.hpp"
#include "came/metrics.hpp"

namespace came {

struct AblationCell {
  std::string grid;   // "modules", "experts" or "gamma"
  std::string label;  // row label within its table
  CameConfig model;
  LossConfig loss;
};

struct AblationRow {
  AblationCell cell;
  std::uint64_t seed = 0;
  std::optional<EvalReport> report;
  std::string error;  // set when the cell failed
};

/// Cells of the requested grids, in table order:
///   modules: Baseline (n=1, CE, no gates), ME, ME+EW, ME+EW+PW
///   experts: ME+EW for each n in expert_counts
///   gamma:   ME+EW+PW for each temperature in gamma_values
std::vector<AblationCell> ablation_grid(const RunConfig& cfg);

/// Trains and evaluates every cell. Identical configurations are trained
/// once; each distinct configuration gets seed mix(run seed, its index).
/// A failing cell is recorded and the sweep continues.
std::vector<AblationRow> run_ablation(const DatasetSplit& ds, const RunConfig& cfg);

/// Markdown tables mirroring the mR@K | R@K | Mean layout, one per grid.
std::string ablation_markdown(const std::vector<AblationRow>& rows, const std::vector<std::size_t>& ks);

}  // namespace came
