// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "came/data.hpp"
#include "came/losses.hpp"
#include "came/model.hpp"
#include "came/train.hpp"

namespace came {

struct EvalConfig {
  std::vector<std::size_t> ks{5, 10, 20};
  bool graph_constraint = true;
  SplitName split = SplitName::test;
};

struct AblateConfig {
  /// Any of "modules", "experts", "gamma".
  std::vector<std::string> grids{"modules", "experts", "gamma"};
  std::vector<std::size_t> expert_counts{2, 3, 4};
  std::vector<double> gamma_values{0.25, 0.5, 1.0, 5.0};
  /// Base loss used by the mixture cells; the baseline always uses CE.
  LossConfig cell_loss{BaseLoss::class_balanced, 2.0, 0.5, 0.999};
  /// Worker threads; 0 picks the hardware concurrency.
  std::size_t jobs = 0;
};

struct GradcheckConfig {
  std::size_t points = 20;
  double tolerance = 1e-4;
  /// Central-difference step; balances truncation against roundoff for O(1) losses.
  double step = 3e-5;
  std::size_t num_classes = 6;
  std::size_t d_x = 5;
  std::size_t d_c = 4;
  std::size_t hidden_dim = 4;
  std::size_t edge_dim = 3;
  /// Test hook: negate the analytic gradient of this parameter group.
  std::string inject_sign_flip;
};

/// Everything a CLI invocation needs. Parsed from a sectioned key = value
/// file; unknown sections or keys are rejected.
struct RunConfig {
  SynthParams data;
  std::string dataset_path;
  CameConfig model;
  LossConfig loss;
  TrainConfig train;
  EvalConfig eval;
  AblateConfig ablate;
  GradcheckConfig gradcheck;
  std::uint64_t seed = 7;
  std::string out_dir = "came_out";

  /// Set "section.key" from its textual value.
  void set(const std::string& dotted_key, const std::string& value);
  std::string get(const std::string& dotted_key) const;
  /// Cross-field checks run before any work starts.
  void validate() const;

  /// Seeds of the data generator and the trainer follow the run seed.
  SynthParams synth_params() const;
  TrainConfig train_config() const;

  static std::vector<std::string> keys();
};

/// Grammar (one statement per line):
///   line    := blank | comment | section | entry
///   comment := ('#' | ';') any*
///   section := '[' name ']'
///   entry   := key '=' value        (whitespace around key and value trimmed)
/// Entries before the first section header are an error. Lists are comma
/// separated; booleans are true/false; reals accept a/b fractions.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
/// Canonical text form; parse_run_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& c);

}  // namespace came
