// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#include "came/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "came/error.hpp"

namespace came {

using nlohmann::json;

PredicateVocabulary PredicateVocabulary::with_default_names(std::size_t m) {
  PredicateVocabulary v;
  v.names.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "predicate_%02zu", i);
    v.names.emplace_back(buf);
  }
  v.train_counts.assign(m, 0);
  return v;
}

const char* to_string(ClassGroup g) noexcept {
  switch (g) {
    case ClassGroup::head: return "head";
    case ClassGroup::body: return "body";
    case ClassGroup::tail: return "tail";
  }
  return "?";
}

const std::vector<ClassId>& ClassPartition::members(ClassGroup g) const noexcept {
  switch (g) {
    case ClassGroup::head: return head;
    case ClassGroup::body: return body;
    default: return tail;
  }
}

const char* to_string(SplitName s) noexcept {
  switch (s) {
    case SplitName::train: return "train";
    case SplitName::val: return "val";
    case SplitName::test: return "test";
  }
  return "?";
}

SplitName split_from_string(const std::string& s) {
  if (s == "train") return SplitName::train;
  if (s == "val") return SplitName::val;
  if (s == "test") return SplitName::test;
  throw InvalidArgument("unknown split '" + s + "'");
}

const std::vector<RelationInstance>& DatasetSplit::part(SplitName s) const noexcept {
  switch (s) {
    case SplitName::train: return train;
    case SplitName::val: return val;
    default: return test;
  }
}

std::vector<RelationInstance>& DatasetSplit::part(SplitName s) noexcept {
  switch (s) {
    case SplitName::train: return train;
    case SplitName::val: return val;
    default: return test;
  }
}

std::vector<std::uint64_t> zipf_counts(std::size_t m, double s, std::uint64_t total) {
  if (m < 1) throw InvalidArgument("zipf_counts: need at least one class");
  if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidArgument("zipf_counts: exponent must be >= 0");
  if (total < m)
    throw InvalidArgument("zipf_counts: total (" + std::to_string(total) +
                          ") smaller than class count (" + std::to_string(m) + ")");
  Vector w(m);
  for (std::size_t k = 0; k < m; ++k) w[k] = std::pow(static_cast<double>(k + 1), -s);
  auto alloc = apportion(w, static_cast<std::size_t>(total));
  std::vector<std::uint64_t> counts(alloc.begin(), alloc.end());
  // Every class keeps at least one instance; donors are the largest classes.
  for (std::size_t k = m; k-- > 0;) {
    while (counts[k] == 0) {
      auto donor = std::max_element(counts.begin(), counts.end());
      --*donor;
      ++counts[k];
    }
  }
  return counts;
}

ClassPartition partition_classes(const PredicateVocabulary& vocab) {
  const std::size_t m = vocab.size();
  if (vocab.train_counts.size() != m)
    throw InvalidArgument("partition_classes: names/counts length mismatch");
  if (m < 3) throw InvalidArgument("partition_classes: need at least 3 classes");
  ClassPartition p;
  p.frequency_order.resize(m);
  std::iota(p.frequency_order.begin(), p.frequency_order.end(), ClassId{0});
  std::stable_sort(p.frequency_order.begin(), p.frequency_order.end(), [&](ClassId a, ClassId b) {
    return vocab.train_counts[a] > vocab.train_counts[b];
  });
  // Integer ceil of 0.3m and 0.4m.
  const std::size_t n_head = (3 * m + 9) / 10;
  const std::size_t n_body = std::min(m - n_head, (4 * m + 9) / 10);
  p.group_of.resize(m);
  for (std::size_t r = 0; r < m; ++r) {
    const ClassId c = p.frequency_order[r];
    if (r < n_head) {
      p.head.push_back(c);
      p.group_of[c] = ClassGroup::head;
    } else if (r < n_head + n_body) {
      p.body.push_back(c);
      p.group_of[c] = ClassGroup::body;
    } else {
      p.tail.push_back(c);
      p.group_of[c] = ClassGroup::tail;
    }
  }
  return p;
}

void recount_vocabulary(DatasetSplit& ds) {
  auto& counts = ds.vocabulary.train_counts;
  counts.assign(ds.vocabulary.size(), 0);
  for (const auto& r : ds.train) {
    if (r.label >= counts.size()) throw SchemaError("label out of range while counting");
    ++counts[r.label];
  }
}

void canonical_sort(std::vector<RelationInstance>& v) {
  std::stable_sort(v.begin(), v.end(), [](const RelationInstance& a, const RelationInstance& b) {
    if (a.image_id != b.image_id) return a.image_id < b.image_id;
    if (a.label != b.label) return a.label < b.label;
    if (a.x != b.x) return a.x < b.x;
    return a.c < b.c;
  });
}

DatasetSplit stratified_split(std::vector<RelationInstance> instances,
                              std::span<const double> fractions, std::uint64_t seed,
                              PredicateVocabulary vocab_template) {
  if (fractions.empty() || fractions.size() > 3)
    throw InvalidArgument("stratified_split: between one and three fractions required");
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw InvalidArgument("stratified_split: fractions must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("stratified_split: fractions must sum to 1");

  const std::size_t m = vocab_template.size();
  std::vector<std::vector<std::size_t>> by_class(m);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (instances[i].label >= m) throw SchemaError("stratified_split: label out of range");
    by_class[instances[i].label].push_back(i);
  }

  DatasetSplit out;
  out.vocabulary = std::move(vocab_template);
  if (!instances.empty()) {
    out.d_x = instances.front().x.size();
    out.d_c = instances.front().c.size();
  }
  Rng rng(mix_seed(seed, 0x5b117));
  for (std::size_t c = 0; c < m; ++c) {
    auto& idx = by_class[c];
    if (idx.empty()) continue;
    rng.shuffle(idx);
    std::vector<std::size_t> alloc;
    if (idx.size() < fractions.size()) {
      alloc.assign(fractions.size(), 0);
      alloc[0] = idx.size();
      if (fractions.size() > 1)
        out.warnings.push_back("class " + std::to_string(c) +
                               (c < out.vocabulary.names.size() ? " (" + out.vocabulary.names[c] + ")" : std::string()) +
                               " has " + std::to_string(idx.size()) +
                               " instance(s), fewer than the number of splits; kept in train");
    } else {
      alloc = apportion(fractions, idx.size());
    }
    std::size_t pos = 0;
    for (std::size_t s = 0; s < alloc.size(); ++s)
      for (std::size_t k = 0; k < alloc[s]; ++k)
        out.part(static_cast<SplitName>(s)).push_back(std::move(instances[idx[pos++]]));
  }
  recount_vocabulary(out);
  return out;
}

DatasetSplit generate_synthetic(const SynthParams& p) {
  if (p.d_x < 2 || p.d_c < 2) throw InvalidArgument("generate_synthetic: dims must be >= 2");
  if (!(p.noise >= 0.0) || !(p.context_noise >= 0.0))
    throw InvalidArgument("generate_synthetic: noise must be >= 0");
  if (p.pairs_per_image < 1) throw InvalidArgument("generate_synthetic: pairs_per_image must be >= 1");
  const std::size_t m = p.num_classes;
  const auto counts = zipf_counts(m, p.zipf_exponent, p.total);

  Rng proto_rng(mix_seed(p.seed, 1));
  std::vector<Vector> protos(m, Vector(p.d_x));
  for (auto& v : protos) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& e : v) {
        e = proto_rng.normal();
        norm += e * e;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (double& e : v) e /= norm;
  }

  // Context map, fixed per seed: c = A proto + B onehot(bucket) + noise.
  PredicateVocabulary full = PredicateVocabulary::with_default_names(m);
  if (m >= 3) full.train_counts = counts;
  Rng map_rng(mix_seed(p.seed, 2));
  Matrix ctx_a(p.d_c, p.d_x), ctx_b(p.d_c, 3);
  for (double& e : ctx_a.data()) e = map_rng.normal() / std::sqrt(static_cast<double>(p.d_x));
  for (double& e : ctx_b.data()) e = map_rng.normal();
  std::vector<std::size_t> bucket(m, 0);
  if (m >= 3) {
    const auto part = partition_classes(full);
    for (std::size_t c = 0; c < m; ++c) bucket[c] = static_cast<std::size_t>(part.group_of[c]);
  }

  Rng noise_rng(mix_seed(p.seed, 3));
  std::vector<RelationInstance> all;
  all.reserve(static_cast<std::size_t>(p.total));
  for (std::size_t c = 0; c < m; ++c) {
    Vector clean_c(p.d_c);
    for (std::size_t r = 0; r < p.d_c; ++r) {
      double acc = ctx_b(r, bucket[c]);
      for (std::size_t k = 0; k < p.d_x; ++k) acc += ctx_a(r, k) * protos[c][k];
      clean_c[r] = acc;
    }
    for (std::uint64_t k = 0; k < counts[c]; ++k) {
      RelationInstance inst;
      inst.label = static_cast<ClassId>(c);
      inst.x = protos[c];
      for (double& e : inst.x) e += p.noise * noise_rng.normal();
      inst.c = clean_c;
      for (double& e : inst.c) e += p.context_noise * noise_rng.normal();
      all.push_back(std::move(inst));
    }
  }

  DatasetSplit ds = stratified_split(std::move(all), p.fractions, p.seed,
                                     PredicateVocabulary::with_default_names(m));
  ds.d_x = p.d_x;
  ds.d_c = p.d_c;

  // Group each split into images of pairs_per_image relations.
  Rng image_rng(mix_seed(p.seed, 4));
  ImageId next_image = 0;
  for (auto s : {SplitName::train, SplitName::val, SplitName::test}) {
    auto& part = ds.part(s);
    std::vector<std::size_t> order(part.size());
    std::iota(order.begin(), order.end(), 0);
    image_rng.shuffle(order);
    for (std::size_t k = 0; k < order.size(); ++k)
      part[order[k]].image_id = next_image + k / p.pairs_per_image;
    next_image += (part.size() + p.pairs_per_image - 1) / p.pairs_per_image;
    canonical_sort(part);
  }
  return ds;
}

namespace {

json vector_json(const Vector& v) {
  json a = json::array();
  for (double d : v) a.push_back(d);
  return a;
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, std::size_t line) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) throw ParseError("unknown field '" + it.key() + "'", line);
  }
  for (const char* k : allowed)
    if (!obj.contains(k)) throw ParseError(std::string("missing field '") + k + "'", line);
}

Vector read_reals(const json& arr, std::size_t expect, const char* field, std::size_t line) {
  if (!arr.is_array()) throw ParseError(std::string("field '") + field + "' must be an array", line);
  if (arr.size() != expect)
    throw SchemaError("line " + std::to_string(line) + ": field '" + field + "' has " +
                      std::to_string(arr.size()) + " values, expected " + std::to_string(expect));
  Vector v;
  v.reserve(expect);
  for (const auto& e : arr) {
    if (!e.is_number()) throw ParseError(std::string("non-numeric value in '") + field + "'", line);
    const double d = e.get<double>();
    if (!std::isfinite(d)) throw ParseError(std::string("non-finite value in '") + field + "'", line);
    v.push_back(d);
  }
  return v;
}

}  // namespace

std::string serialize_feature_dump(const DatasetSplit& ds) {
  std::string out;
  nlohmann::ordered_json header;
  header["format"] = "came-features";
  header["version"] = 1;
  header["m"] = ds.vocabulary.size();
  header["d_x"] = ds.d_x;
  header["d_c"] = ds.d_c;
  header["names"] = ds.vocabulary.names;
  out += header.dump();
  out += '\n';
  for (auto s : {SplitName::train, SplitName::val, SplitName::test}) {
    for (const auto& r : ds.part(s)) {
      nlohmann::ordered_json rec;
      rec["split"] = to_string(s);
      rec["image_id"] = r.image_id;
      rec["x"] = vector_json(r.x);
      rec["c"] = vector_json(r.c);
      rec["label"] = r.label;
      out += rec.dump();
      out += '\n';
    }
  }
  return out;
}

DatasetSplit parse_feature_dump(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  DatasetSplit ds;
  bool have_header = false;
  std::size_t m = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    if (!obj.is_object()) throw ParseError("expected a JSON object", lineno);
    if (!have_header) {
      check_keys(obj, {"format", "version", "m", "d_x", "d_c", "names"}, lineno);
      if (obj["format"] != "came-features") throw ParseError("not a came-features dump", lineno);
      if (obj["version"] != 1) throw SchemaError("unsupported feature dump version");
      if (!obj["m"].is_number_unsigned() || !obj["d_x"].is_number_unsigned() ||
          !obj["d_c"].is_number_unsigned())
        throw ParseError("m, d_x and d_c must be non-negative integers", lineno);
      m = obj["m"].get<std::size_t>();
      ds.d_x = obj["d_x"].get<std::size_t>();
      ds.d_c = obj["d_c"].get<std::size_t>();
      if (m == 0 || ds.d_x == 0 || ds.d_c == 0) throw SchemaError("m, d_x and d_c must be positive");
      if (!obj["names"].is_array() || obj["names"].size() != m)
        throw SchemaError("header 'names' must list exactly m predicates");
      for (const auto& n : obj["names"]) {
        if (!n.is_string()) throw ParseError("predicate names must be strings", lineno);
        ds.vocabulary.names.push_back(n.get<std::string>());
      }
      have_header = true;
      continue;
    }
    check_keys(obj, {"split", "image_id", "x", "c", "label"}, lineno);
    if (!obj["split"].is_string()) throw ParseError("'split' must be a string", lineno);
    SplitName split;
    try {
      split = split_from_string(obj["split"].get<std::string>());
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), lineno);
    }
    if (!obj["image_id"].is_number_unsigned()) throw ParseError("'image_id' must be a non-negative integer", lineno);
    if (!obj["label"].is_number_integer()) throw ParseError("'label' must be an integer", lineno);
    const auto label = obj["label"].get<long long>();
    if (label < 0 || static_cast<std::size_t>(label) >= m)
      throw SchemaError("record at line " + std::to_string(lineno) + ": label " + std::to_string(label) +
                        " outside [0, " + std::to_string(m) + ")");
    RelationInstance r;
    r.image_id = obj["image_id"].get<ImageId>();
    r.label = static_cast<ClassId>(label);
    r.x = read_reals(obj["x"], ds.d_x, "x", lineno);
    r.c = read_reals(obj["c"], ds.d_c, "c", lineno);
    ds.part(split).push_back(std::move(r));
  }
  if (!have_header) throw SchemaError("feature dump has no header line");
  if (ds.train.empty()) throw SchemaError("feature dump has an empty train section");
  ds.vocabulary.train_counts.assign(m, 0);
  recount_vocabulary(ds);
  return ds;
}

DatasetSplit load_feature_dump(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open feature dump '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_feature_dump(ss.str());
}

void save_feature_dump(const DatasetSplit& ds, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write feature dump '" + path.string() + "'");
  f << serialize_feature_dump(ds);
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace came
