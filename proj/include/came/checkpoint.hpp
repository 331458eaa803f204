// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "came/data.hpp"
#include "came/model.hpp"
#include "came/train.hpp"

namespace came {

/// Binary checkpoint, all integers and reals little-endian:
///
///   "CAMECKPT"                         8 bytes magic
///   u32 version (= 1)
///   u32 num_experts, u32 hidden_dim, u32 edge_dim
///   f64 pw_temperature, u8 ew_enabled, u8 pw_enabled, u8 activation, f64 pw_aux_weight
///   u32 d_x, u32 d_c, u32 m
///   m x { u32 name_len, name bytes (UTF-8), u64 train_count }
///   tensor block: u32 count, count x { u32 name_len, name, u32 rows, u32 cols, rows*cols f64 }
///   u8 has_train_state
///   [u64 epochs_completed, u64 optimizer_step, tensor block of momentum buffers]
struct Checkpoint {
  CameConfig config;
  PredicateVocabulary vocabulary;
  std::size_t d_x = 0;
  std::size_t d_c = 0;
  CameParams params;
  std::optional<TrainState> train_state;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const Checkpoint& ck);
Checkpoint parse_checkpoint(const std::string& bytes);
void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace came
