// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "came/data.hpp"
#include "came/model.hpp"

namespace came {

using PairId = std::uint64_t;

struct GtTriplet {
  PairId pair_id = 0;
  ClassId predicate = 0;
};

struct ScoredPair {
  PairId pair_id = 0;
  Vector scores;  // length m
};

/// One image in the PredCls setting: object pairs are given, only the
/// predicate of each pair is scored.
struct ImagePredictions {
  ImageId image_id = 0;
  std::vector<GtTriplet> gt;
  std::vector<ScoredPair> pairs;
};

struct ImageRecall {
  ImageId image_id = 0;
  std::size_t matched = 0;
  std::size_t total = 0;
};

struct RecallResult {
  double recall = 0.0;
  std::vector<ImageRecall> per_image;  // images with at least one gt triplet
  std::size_t images_without_gt = 0;
};

struct ClassRecallResult {
  double mean_recall = 0.0;
  Vector per_class_recall;      // 0 where absent
  std::vector<bool> present;    // class has >= 1 gt triplet
  std::vector<std::uint64_t> matched;
  std::vector<std::uint64_t> total;
};

struct VarOverMean {
  double value = 0.0;   // population variance / mean, x100
  bool zero_mean = false;
};

struct GroupRecall {
  std::optional<double> head;
  std::optional<double> body;
  std::optional<double> tail;
};

/// Validates the prediction set and returns the class count m.
std::size_t validate_predictions(std::span<const ImagePredictions> preds);

/// For every gt triplet of `image`, whether it lands in the top-K candidate
/// list. Candidates are sorted by score desc, then pair id, then predicate id.
std::vector<bool> match_top_k(const ImagePredictions& image, std::size_t k, bool graph_constraint);

RecallResult recall_at_k(std::span<const ImagePredictions> preds, std::size_t k, bool graph_constraint);
ClassRecallResult mean_recall_at_k(std::span<const ImagePredictions> preds, std::size_t k,
                                   bool graph_constraint);

/// Arithmetic mean of the four percentages.
double mean_metric(double r_lo, double r_hi, double mr_lo, double mr_hi);

VarOverMean var_over_mean(std::span<const double> per_class_recall, const std::vector<bool>& present);

GroupRecall group_mean_recall(std::span<const double> per_class_recall, const std::vector<bool>& present,
                              const ClassPartition& partition);

struct KMetrics {
  std::size_t k = 0;
  double recall = 0.0;
  double mean_recall = 0.0;
  Vector per_class_recall;
  VarOverMean var_over_mean;
  GroupRecall groups;
};

struct EvalReport {
  bool graph_constraint = true;
  std::size_t num_classes = 0;
  std::size_t images_evaluated = 0;
  std::size_t images_without_gt = 0;
  std::vector<std::string> class_names;
  std::vector<std::uint64_t> gt_count;   // per class
  std::vector<std::uint64_t> train_count;
  std::vector<bool> present;
  ClassPartition partition;
  std::vector<KMetrics> at;               // ascending K
  /// mean_metric over R and mR at the two largest K, in percent.
  double mean = 0.0;

  const KMetrics& metrics_at(std::size_t k) const;
};

EvalReport evaluate_predictions(std::span<const ImagePredictions> preds, std::span<const std::size_t> ks,
                                bool graph_constraint, const PredicateVocabulary& vocab);

/// Group instances by image id, score each pair with softmax of the
/// inference logits (pair ids are positions within the image).
std::vector<ImagePredictions> predict(const CameParams& params, const CameConfig& cfg,
                                      std::span<const RelationInstance> instances);

EvalReport evaluate(const CameParams& params, const CameConfig& cfg,
                    std::span<const RelationInstance> instances, std::span<const std::size_t> ks,
                    const PredicateVocabulary& vocab, bool graph_constraint = true);

/// Stable-key-order JSON document.
std::string serialize_eval_report(const EvalReport& r);
EvalReport parse_eval_report(const std::string& text);

/// Line-delimited prediction dump:
/// {"image_id":N,"pair_id":N,"gt_label":N (optional),"scores":[m reals]}
std::vector<ImagePredictions> parse_prediction_dump(const std::string& text);
std::string serialize_prediction_dump(std::span<const ImagePredictions> preds);

}  // namespace came
