// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "came/numerics.hpp"

namespace came {

using ClassId = std::uint32_t;
using ImageId = std::uint64_t;

struct PredicateVocabulary {
  std::vector<std::string> names;
  std::vector<std::uint64_t> train_counts;

  std::size_t size() const noexcept { return names.size(); }
  static PredicateVocabulary with_default_names(std::size_t m);

  friend bool operator==(const PredicateVocabulary&, const PredicateVocabulary&) = default;
};

enum class ClassGroup : std::uint8_t { head = 0, body = 1, tail = 2 };
const char* to_string(ClassGroup g) noexcept;

/// Head/body/tail split of the predicate vocabulary by training frequency.
struct ClassPartition {
  std::vector<ClassId> head;
  std::vector<ClassId> body;
  std::vector<ClassId> tail;
  /// group_of[c] for every class id.
  std::vector<ClassGroup> group_of;
  /// Class ids by descending train count, ties by id.
  std::vector<ClassId> frequency_order;

  std::size_t num_classes() const noexcept { return group_of.size(); }
  const std::vector<ClassId>& members(ClassGroup g) const noexcept;
};

struct RelationInstance {
  ImageId image_id = 0;
  Vector x;
  Vector c;
  ClassId label = 0;

  friend bool operator==(const RelationInstance&, const RelationInstance&) = default;
};

enum class SplitName : std::uint8_t { train = 0, val = 1, test = 2 };
const char* to_string(SplitName s) noexcept;
SplitName split_from_string(const std::string& s);

struct DatasetSplit {
  std::vector<RelationInstance> train;
  std::vector<RelationInstance> val;
  std::vector<RelationInstance> test;
  PredicateVocabulary vocabulary;
  std::size_t d_x = 0;
  std::size_t d_c = 0;
  /// Non-fatal notes produced while building the split.
  std::vector<std::string> warnings;

  const std::vector<RelationInstance>& part(SplitName s) const noexcept;
  std::vector<RelationInstance>& part(SplitName s) noexcept;

  friend bool operator==(const DatasetSplit& a, const DatasetSplit& b) {
    return a.train == b.train && a.val == b.val && a.test == b.test &&
           a.vocabulary == b.vocabulary && a.d_x == b.d_x && a.d_c == b.d_c;
  }
};

/// Per-class counts proportional to 1/k^s by rank, largest-remainder rounded.
std::vector<std::uint64_t> zipf_counts(std::size_t m, double s, std::uint64_t total);

/// Sort by descending count (ties by id) and cut ceil(0.3m) / ceil(0.4m) / rest.
ClassPartition partition_classes(const PredicateVocabulary& vocab);

struct SynthParams {
  std::size_t num_classes = 50;
  double zipf_exponent = 1.2;
  std::uint64_t total = 30000;
  std::size_t d_x = 16;
  std::size_t d_c = 8;
  double noise = 0.45;
  double context_noise = 0.3;
  std::size_t pairs_per_image = 8;
  std::array<double, 3> fractions{2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0};
  std::uint64_t seed = 7;
};

/// Deterministic long-tailed dataset: class prototypes on the unit sphere,
/// x = prototype + N(0, noise^2), c = fixed linear map of (prototype, frequency
/// bucket one-hot) + N(0, context_noise^2).
DatasetSplit generate_synthetic(const SynthParams& p);

/// Per-class largest-remainder allocation across len(fractions) splits.
/// Classes with fewer instances than splits go entirely to train and add a
/// warning. The vocabulary counts are recomputed from the train part.
DatasetSplit stratified_split(std::vector<RelationInstance> instances,
                              std::span<const double> fractions, std::uint64_t seed,
                              PredicateVocabulary vocab_template);

/// Recompute vocabulary train counts from the train list.
void recount_vocabulary(DatasetSplit& ds);

/// Canonical order: image id, then label, then x, then c (lexicographic).
void canonical_sort(std::vector<RelationInstance>& v);

/// Line-delimited JSON feature dump. First line is the header
/// {"format":"came-features","version":1,"m":..,"d_x":..,"d_c":..,"names":[..]},
/// every following line one record
/// {"split":"train|val|test","image_id":N,"x":[..],"c":[..],"label":N}.
std::string serialize_feature_dump(const DatasetSplit& ds);
DatasetSplit parse_feature_dump(const std::string& text);
DatasetSplit load_feature_dump(const std::filesystem::path& path);
void save_feature_dump(const DatasetSplit& ds, const std::filesystem::path& path);

}  // namespace came
