// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#include "came/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "came/error.hpp"

namespace came {

using ojson = nlohmann::ordered_json;

std::size_t validate_predictions(std::span<const ImagePredictions> preds) {
  std::size_t m = 0;
  for (const auto& img : preds) {
    std::unordered_map<PairId, std::size_t> seen;
    for (std::size_t k = 0; k < img.pairs.size(); ++k) {
      const auto& sp = img.pairs[k];
      if (!seen.emplace(sp.pair_id, k).second)
        throw InvalidArgument("image " + std::to_string(img.image_id) + ": duplicate pair id " +
                              std::to_string(sp.pair_id));
      if (sp.scores.empty()) throw InvalidArgument("image " + std::to_string(img.image_id) + ": empty score vector");
      if (m == 0) m = sp.scores.size();
      if (sp.scores.size() != m) throw InvalidArgument("score vectors have differing lengths");
      for (double s : sp.scores)
        if (!std::isfinite(s)) throw InvalidArgument("non-finite predicate score");
    }
    for (const auto& gt : img.gt) {
      if (!seen.count(gt.pair_id))
        throw InvalidArgument("image " + std::to_string(img.image_id) + ": gt pair " +
                              std::to_string(gt.pair_id) + " has no score vector");
      if (gt.predicate >= m) throw InvalidArgument("gt predicate outside the score vector");
    }
  }
  return m;
}

namespace {

struct Candidate {
  double score;
  PairId pair;
  ClassId predicate;
};

bool ranks_before(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.pair != b.pair) return a.pair < b.pair;
  return a.predicate < b.predicate;
}

void check_k(std::size_t k) {
  if (k == 0) throw InvalidArgument("K must be >= 1");
}

}  // namespace

std::vector<bool> match_top_k(const ImagePredictions& image, std::size_t k, bool graph_constraint) {
  check_k(k);
  std::vector<Candidate> cand;
  for (const auto& sp : image.pairs) {
    if (graph_constraint) {
      ClassId best = 0;
      for (ClassId j = 1; j < sp.scores.size(); ++j)
        if (sp.scores[j] > sp.scores[best]) best = j;
      cand.push_back({sp.scores[best], sp.pair_id, best});
    } else {
      for (ClassId j = 0; j < sp.scores.size(); ++j) cand.push_back({sp.scores[j], sp.pair_id, j});
    }
  }
  const std::size_t keep = std::min(k, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(), ranks_before);
  cand.resize(keep);
  std::vector<bool> hit(image.gt.size(), false);
  for (std::size_t g = 0; g < image.gt.size(); ++g)
    for (const auto& c : cand)
      if (c.pair == image.gt[g].pair_id && c.predicate == image.gt[g].predicate) {
        hit[g] = true;
        break;
      }
  return hit;
}

RecallResult recall_at_k(std::span<const ImagePredictions> preds, std::size_t k, bool graph_constraint) {
  check_k(k);
  validate_predictions(preds);
  RecallResult out;
  double sum = 0.0;
  for (const auto& img : preds) {
    if (img.gt.empty()) {
      ++out.images_without_gt;
      continue;
    }
    const auto hit = match_top_k(img, k, graph_constraint);
    ImageRecall ir{img.image_id, static_cast<std::size_t>(std::count(hit.begin(), hit.end(), true)), img.gt.size()};
    sum += static_cast<double>(ir.matched) / static_cast<double>(ir.total);
    out.per_image.push_back(ir);
  }
  out.recall = out.per_image.empty() ? 0.0 : sum / static_cast<double>(out.per_image.size());
  return out;
}

ClassRecallResult mean_recall_at_k(std::span<const ImagePredictions> preds, std::size_t k,
                                   bool graph_constraint) {
  check_k(k);
  const std::size_t m = validate_predictions(preds);
  ClassRecallResult out;
  out.matched.assign(m, 0);
  out.total.assign(m, 0);
  for (const auto& img : preds) {
    if (img.gt.empty()) continue;
    const auto hit = match_top_k(img, k, graph_constraint);
    for (std::size_t g = 0; g < img.gt.size(); ++g) {
      ++out.total[img.gt[g].predicate];
      if (hit[g]) ++out.matched[img.gt[g].predicate];
    }
  }
  out.per_class_recall.assign(m, 0.0);
  out.present.assign(m, false);
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < m; ++c) {
    if (out.total[c] == 0) continue;
    out.present[c] = true;
    out.per_class_recall[c] = static_cast<double>(out.matched[c]) / static_cast<double>(out.total[c]);
    sum += out.per_class_recall[c];
    ++present;
  }
  out.mean_recall = present ? sum / static_cast<double>(present) : 0.0;
  return out;
}

double mean_metric(double r_lo, double r_hi, double mr_lo, double mr_hi) {
  for (double v : {r_lo, r_hi, mr_lo, mr_hi})
    if (!(v >= 0.0 && v <= 100.0)) throw InvalidArgument("mean_metric: inputs must be percentages in [0, 100]");
  return (r_lo + r_hi + mr_lo + mr_hi) / 4.0;
}

VarOverMean var_over_mean(std::span<const double> per_class_recall, const std::vector<bool>& present) {
  if (present.size() != per_class_recall.size()) throw InvalidArgument("var_over_mean: mask length mismatch");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < present.size(); ++c)
    if (present[c]) {
      sum += per_class_recall[c];
      ++n;
    }
  if (n == 0) throw InvalidArgument("var_over_mean: no present classes");
  const double mean = sum / static_cast<double>(n);
  VarOverMean out;
  if (mean == 0.0) {
    out.zero_mean = true;
    return out;
  }
  double var = 0.0;
  for (std::size_t c = 0; c < present.size(); ++c)
    if (present[c]) var += (per_class_recall[c] - mean) * (per_class_recall[c] - mean);
  var /= static_cast<double>(n);
  out.value = 100.0 * var / mean;
  return out;
}

GroupRecall group_mean_recall(std::span<const double> per_class_recall, const std::vector<bool>& present,
                              const ClassPartition& partition) {
  if (partition.num_classes() != per_class_recall.size() || present.size() != per_class_recall.size())
    throw InvalidArgument("group_mean_recall: partition does not match the class count");
  auto avg = [&](const std::vector<ClassId>& ids) -> std::optional<double> {
    double sum = 0.0;
    std::size_t n = 0;
    for (ClassId c : ids)
      if (present[c]) {
        sum += per_class_recall[c];
        ++n;
      }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  return {avg(partition.head), avg(partition.body), avg(partition.tail)};
}

const KMetrics& EvalReport::metrics_at(std::size_t k) const {
  for (const auto& a : at)
    if (a.k == k) return a;
  throw InvalidArgument("report has no metrics at K=" + std::to_string(k));
}

EvalReport evaluate_predictions(std::span<const ImagePredictions> preds, std::span<const std::size_t> ks,
                                bool graph_constraint, const PredicateVocabulary& vocab) {
  if (ks.empty()) throw InvalidArgument("evaluate: at least one K required");
  const std::size_t m = validate_predictions(preds);
  if (m != 0 && m != vocab.size())
    throw InvalidArgument("evaluate: scores have " + std::to_string(m) + " classes, vocabulary has " +
                          std::to_string(vocab.size()));
  std::vector<std::size_t> sorted_ks(ks.begin(), ks.end());
  std::sort(sorted_ks.begin(), sorted_ks.end());
  sorted_ks.erase(std::unique(sorted_ks.begin(), sorted_ks.end()), sorted_ks.end());

  EvalReport rep;
  rep.graph_constraint = graph_constraint;
  rep.num_classes = vocab.size();
  rep.class_names = vocab.names;
  rep.train_count = vocab.train_counts;
  rep.partition = partition_classes(vocab);
  for (std::size_t k : sorted_ks) {
    const auto rr = recall_at_k(preds, k, graph_constraint);
    const auto cr = mean_recall_at_k(preds, k, graph_constraint);
    KMetrics km;
    km.k = k;
    km.recall = rr.recall;
    km.mean_recall = cr.mean_recall;
    km.per_class_recall = cr.per_class_recall;
    if (km.per_class_recall.empty()) km.per_class_recall.assign(vocab.size(), 0.0);
    rep.present = cr.present.empty() ? std::vector<bool>(vocab.size(), false) : cr.present;
    rep.gt_count = cr.total.empty() ? std::vector<std::uint64_t>(vocab.size(), 0) : cr.total;
    if (std::find(rep.present.begin(), rep.present.end(), true) != rep.present.end())
      km.var_over_mean = var_over_mean(km.per_class_recall, rep.present);
    km.groups = group_mean_recall(km.per_class_recall, rep.present, rep.partition);
    rep.images_evaluated = rr.per_image.size();
    rep.images_without_gt = rr.images_without_gt;
    rep.at.push_back(std::move(km));
  }
  const auto& hi = rep.at.back();
  const auto& lo = rep.at.size() > 1 ? rep.at[rep.at.size() - 2] : hi;
  rep.mean = mean_metric(100.0 * lo.recall, 100.0 * hi.recall, 100.0 * lo.mean_recall, 100.0 * hi.mean_recall);
  return rep;
}

std::vector<ImagePredictions> predict(const CameParams& params, const CameConfig& cfg,
                                      std::span<const RelationInstance> instances) {
  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return instances[a].image_id < instances[b].image_id; });
  std::vector<ImagePredictions> out;
  for (std::size_t idx : order) {
    const auto& inst = instances[idx];
    if (out.empty() || out.back().image_id != inst.image_id) {
      out.emplace_back();
      out.back().image_id = inst.image_id;
    }
    auto& img = out.back();
    const PairId pid = img.pairs.size();
    const ForwardTrace t = forward(params, cfg, inst.x, inst.c);
    img.pairs.push_back({pid, stable_softmax(inference_logits(t, cfg))});
    img.gt.push_back({pid, inst.label});
  }
  return out;
}

EvalReport evaluate(const CameParams& params, const CameConfig& cfg,
                    std::span<const RelationInstance> instances, std::span<const std::size_t> ks,
                    const PredicateVocabulary& vocab, bool graph_constraint) {
  if (params.num_classes() != vocab.size()) throw InvalidArgument("evaluate: model and vocabulary class counts differ");
  const auto preds = predict(params, cfg, instances);
  return evaluate_predictions(preds, ks, graph_constraint, vocab);
}

namespace {

ojson optional_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

std::optional<double> optional_from(const ojson& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

std::string serialize_eval_report(const EvalReport& r) {
  ojson doc;
  doc["format"] = "came-eval-report";
  doc["version"] = 1;
  doc["graph_constraint"] = r.graph_constraint;
  doc["num_classes"] = r.num_classes;
  doc["images_evaluated"] = r.images_evaluated;
  doc["images_without_gt"] = r.images_without_gt;
  doc["mean"] = r.mean;
  ojson ks = ojson::array();
  for (const auto& a : r.at) ks.push_back(a.k);
  doc["ks"] = ks;
  ojson recall = ojson::object(), mrecall = ojson::object(), vom = ojson::object(), groups = ojson::object(),
        pcr = ojson::object();
  for (const auto& a : r.at) {
    const std::string key = std::to_string(a.k);
    recall[key] = a.recall;
    mrecall[key] = a.mean_recall;
    vom[key] = {{"value", a.var_over_mean.value}, {"zero_mean", a.var_over_mean.zero_mean}};
    groups[key] = {{"head", optional_json(a.groups.head)},
                   {"body", optional_json(a.groups.body)},
                   {"tail", optional_json(a.groups.tail)}};
    pcr[key] = a.per_class_recall;
  }
  doc["recall_at"] = recall;
  doc["mean_recall_at"] = mrecall;
  doc["var_over_mean"] = vom;
  doc["group_recall"] = groups;
  doc["per_class_recall"] = pcr;
  ojson classes = ojson::array();
  for (std::size_t c = 0; c < r.num_classes; ++c) {
    classes.push_back({{"id", c},
                       {"name", c < r.class_names.size() ? r.class_names[c] : std::string()},
                       {"group", to_string(r.partition.group_of[c])},
                       {"present", static_cast<bool>(r.present[c])},
                       {"train_count", r.train_count[c]},
                       {"gt_count", r.gt_count[c]}});
  }
  doc["classes"] = classes;
  ojson order = ojson::array();
  for (ClassId c : r.partition.frequency_order) order.push_back(c);
  doc["frequency_order"] = order;
  return doc.dump(2) + "\n";
}

EvalReport parse_eval_report(const std::string& text) {
  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw ParseError(std::string("malformed eval report: ") + e.what(), 0);
  }
  try {
    if (doc.at("format") != "came-eval-report") throw SchemaError("not a came-eval-report document");
    EvalReport r;
    r.graph_constraint = doc.at("graph_constraint").get<bool>();
    r.num_classes = doc.at("num_classes").get<std::size_t>();
    r.images_evaluated = doc.at("images_evaluated").get<std::size_t>();
    r.images_without_gt = doc.at("images_without_gt").get<std::size_t>();
    r.mean = doc.at("mean").get<double>();
    const auto& classes = doc.at("classes");
    if (classes.size() != r.num_classes) throw SchemaError("eval report class list length mismatch");
    r.partition.group_of.resize(r.num_classes);
    for (const auto& c : classes) {
      const auto id = c.at("id").get<std::size_t>();
      if (id >= r.num_classes) throw SchemaError("eval report class id out of range");
      r.class_names.push_back(c.at("name").get<std::string>());
      r.present.push_back(c.at("present").get<bool>());
      r.train_count.push_back(c.at("train_count").get<std::uint64_t>());
      r.gt_count.push_back(c.at("gt_count").get<std::uint64_t>());
      const std::string g = c.at("group").get<std::string>();
      r.partition.group_of[id] = g == "head" ? ClassGroup::head : g == "body" ? ClassGroup::body : ClassGroup::tail;
    }
    for (const auto& c : doc.at("frequency_order")) {
      const auto id = c.get<ClassId>();
      r.partition.frequency_order.push_back(id);
      switch (r.partition.group_of.at(id)) {
        case ClassGroup::head: r.partition.head.push_back(id); break;
        case ClassGroup::body: r.partition.body.push_back(id); break;
        case ClassGroup::tail: r.partition.tail.push_back(id); break;
      }
    }
    for (const auto& kj : doc.at("ks")) {
      KMetrics a;
      a.k = kj.get<std::size_t>();
      const std::string key = std::to_string(a.k);
      a.recall = doc.at("recall_at").at(key).get<double>();
      a.mean_recall = doc.at("mean_recall_at").at(key).get<double>();
      a.var_over_mean.value = doc.at("var_over_mean").at(key).at("value").get<double>();
      a.var_over_mean.zero_mean = doc.at("var_over_mean").at(key).at("zero_mean").get<bool>();
      const auto& g = doc.at("group_recall").at(key);
      a.groups = {optional_from(g.at("head")), optional_from(g.at("body")), optional_from(g.at("tail"))};
      a.per_class_recall = doc.at("per_class_recall").at(key).get<Vector>();
      r.at.push_back(std::move(a));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("eval report: ") + e.what());
  }
}

std::vector<ImagePredictions> parse_prediction_dump(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<ImagePredictions> out;
  std::unordered_map<ImageId, std::size_t> index;
  std::size_t m = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    if (!obj.is_object()) throw ParseError("expected a JSON object", lineno);
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (it.key() != "image_id" && it.key() != "pair_id" && it.key() != "gt_label" && it.key() != "scores")
        throw ParseError("unknown field '" + it.key() + "'", lineno);
    if (!obj.contains("image_id") || !obj["image_id"].is_number_unsigned())
      throw ParseError("'image_id' must be a non-negative integer", lineno);
    if (!obj.contains("pair_id") || !obj["pair_id"].is_number_unsigned())
      throw ParseError("'pair_id' must be a non-negative integer", lineno);
    if (!obj.contains("scores") || !obj["scores"].is_array() || obj["scores"].empty())
      throw ParseError("'scores' must be a non-empty array", lineno);
    ScoredPair sp;
    sp.pair_id = obj["pair_id"].get<PairId>();
    for (const auto& s : obj["scores"]) {
      if (!s.is_number()) throw ParseError("non-numeric score", lineno);
      sp.scores.push_back(s.get<double>());
    }
    if (m == 0) m = sp.scores.size();
    if (sp.scores.size() != m)
      throw SchemaError("line " + std::to_string(lineno) + ": expected " + std::to_string(m) + " scores");
    const auto image = obj["image_id"].get<ImageId>();
    auto [it, fresh] = index.emplace(image, out.size());
    if (fresh) {
      out.emplace_back();
      out.back().image_id = image;
    }
    auto& img = out[it->second];
    for (const auto& p : img.pairs)
      if (p.pair_id == sp.pair_id) throw SchemaError("line " + std::to_string(lineno) + ": duplicate pair id");
    if (obj.contains("gt_label") && !obj["gt_label"].is_null()) {
      if (!obj["gt_label"].is_number_integer()) throw ParseError("'gt_label' must be an integer", lineno);
      const auto g = obj["gt_label"].get<long long>();
      if (g < 0 || static_cast<std::size_t>(g) >= m)
        throw SchemaError("line " + std::to_string(lineno) + ": gt_label outside [0, " + std::to_string(m) + ")");
      img.gt.push_back({sp.pair_id, static_cast<ClassId>(g)});
    }
    img.pairs.push_back(std::move(sp));
  }
  std::sort(out.begin(), out.end(),
            [](const ImagePredictions& a, const ImagePredictions& b) { return a.image_id < b.image_id; });
  return out;
}

std::string serialize_prediction_dump(std::span<const ImagePredictions> preds) {
  std::string out;
  for (const auto& img : preds) {
    for (const auto& sp : img.pairs) {
      ojson rec;
      rec["image_id"] = img.image_id;
      rec["pair_id"] = sp.pair_id;
      const GtTriplet* gt = nullptr;
      for (const auto& g : img.gt)
        if (g.pair_id == sp.pair_id) {
          if (gt) throw InvalidArgument("prediction dump holds one gt label per pair");
          gt = &g;
        }
      if (gt) rec["gt_label"] = gt->predicate;
      rec["scores"] = sp.scores;
      out += rec.dump();
      out += '\n';
    }
  }
  return out;
}

}  // namespace came
