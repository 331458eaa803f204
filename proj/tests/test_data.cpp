// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "came/data.hpp"
#include "came/error.hpp"
#include "support.hpp"

using namespace came;

namespace {

SynthParams small_params() {
  SynthParams p;
  p.num_classes = 10;
  p.total = 2000;
  p.d_x = 6;
  p.d_c = 4;
  return p;
}

PredicateVocabulary vocab_with_counts(std::vector<std::uint64_t> counts) {
  auto v = PredicateVocabulary::with_default_names(counts.size());
  v.train_counts = std::move(counts);
  return v;
}

}  // namespace

TEST_CASE("zipf_counts") {
  CHECK(zipf_counts(3, 1.0, 1100) == std::vector<std::uint64_t>{600, 300, 200});
  CHECK(zipf_counts(4, 0.0, 400) == std::vector<std::uint64_t>{100, 100, 100, 100});
  CHECK(zipf_counts(1, 1.2, 77) == std::vector<std::uint64_t>{77});
  CHECK_THROWS_AS(zipf_counts(5, 1.0, 4), InvalidArgument);

  SUBCASE("head to tail ratio for the default profile") {
    const auto c = zipf_counts(50, 1.2, 20000);
    const double ratio = static_cast<double>(c.front()) / static_cast<double>(c.back());
    CHECK(ratio == doctest::Approx(std::pow(50.0, 1.2)).epsilon(0.03));
  }
  SUBCASE("sums exactly, non-increasing, every class populated") {
    came::Rng rng(1);
    for (int t = 0; t < 200; ++t) {
      const std::size_t m = 1 + rng.below(60);
      const double s = rng.uniform(0.0, 3.0);
      const std::uint64_t total = m + rng.below(5000);
      const auto c = zipf_counts(m, s, total);
      CHECK(std::accumulate(c.begin(), c.end(), std::uint64_t{0}) == total);
      CHECK(std::is_sorted(c.rbegin(), c.rend()));
      CHECK(*std::min_element(c.begin(), c.end()) >= 1);
    }
  }
}

TEST_CASE("partition_classes") {
  SUBCASE("fifty classes split 15/20/15") {
    const auto p = partition_classes(vocab_with_counts(zipf_counts(50, 1.2, 20000)));
    CHECK(p.head.size() == 15);
    CHECK(p.body.size() == 20);
    CHECK(p.tail.size() == 15);
  }
  SUBCASE("strictly decreasing counts") {
    std::vector<std::uint64_t> counts(10);
    for (std::size_t i = 0; i < 10; ++i) counts[i] = 100 - i;
    const auto p = partition_classes(vocab_with_counts(counts));
    CHECK(p.head == std::vector<ClassId>{0, 1, 2});
    CHECK(p.body == std::vector<ClassId>{3, 4, 5, 6});
    CHECK(p.tail == std::vector<ClassId>{7, 8, 9});
  }
  SUBCASE("ties fall back to class id") {
    const auto p = partition_classes(vocab_with_counts(std::vector<std::uint64_t>(10, 5)));
    CHECK(p.head == std::vector<ClassId>{0, 1, 2});
    CHECK(p.tail == std::vector<ClassId>{7, 8, 9});
  }
  SUBCASE("frequency order dominates id order") {
    const auto p = partition_classes(vocab_with_counts({1, 50, 7}));
    CHECK(p.frequency_order == std::vector<ClassId>{1, 2, 0});
    CHECK(p.group_of[1] == ClassGroup::head);
    CHECK(p.group_of[0] == ClassGroup::body);
    CHECK(p.tail.empty());
  }
  SUBCASE("covers every class exactly once") {
    came::Rng rng(2);
    for (int t = 0; t < 100; ++t) {
      const std::size_t m = 3 + rng.below(80);
      const auto p = partition_classes(vocab_with_counts(came::testing::random_counts(rng, m, 50)));
      std::vector<int> seen(m, 0);
      for (auto g : {ClassGroup::head, ClassGroup::body, ClassGroup::tail})
        for (ClassId c : p.members(g)) {
          ++seen[c];
          CHECK(p.group_of[c] == g);
        }
      CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
    }
  }
  CHECK_THROWS_AS(partition_classes(vocab_with_counts({3, 2})), InvalidArgument);
}

TEST_CASE("generate_synthetic") {
  const auto p = small_params();
  const auto a = generate_synthetic(p);
  const auto b = generate_synthetic(p);

  CHECK(a == b);
  CHECK(serialize_feature_dump(a) == serialize_feature_dump(b));
  CHECK(a.train.size() + a.val.size() + a.test.size() == p.total);
  CHECK(a.vocabulary.size() == p.num_classes);
  CHECK(a.d_x == p.d_x);
  CHECK(a.d_c == p.d_c);

  SUBCASE("vocabulary counts match the train labels") {
    std::vector<std::uint64_t> counts(p.num_classes, 0);
    for (const auto& r : a.train) ++counts[r.label];
    CHECK(counts == a.vocabulary.train_counts);
  }
  SUBCASE("different seeds differ") {
    auto q = p;
    q.seed = p.seed + 1;
    CHECK_FALSE(generate_synthetic(q) == a);
  }
  SUBCASE("images hold at most pairs_per_image instances and do not span splits") {
    std::map<ImageId, std::pair<int, int>> seen;  // id -> (count, split)
    for (int s = 0; s < 3; ++s)
      for (const auto& r : a.part(static_cast<SplitName>(s))) {
        auto [it, fresh] = seen.emplace(r.image_id, std::make_pair(0, s));
        ++it->second.first;
        CHECK(it->second.second == s);
      }
    for (const auto& [id, v] : seen) CHECK(v.first <= static_cast<int>(p.pairs_per_image));
  }
}

TEST_CASE("noise-free synthetic data is linearly separable") {
  auto p = small_params();
  p.noise = 0.0;
  const auto ds = generate_synthetic(p);
  std::map<ClassId, Vector> proto;
  for (const auto& r : ds.train) {
    if (proto.count(r.label)) CHECK(proto[r.label] == r.x);
    proto[r.label] = r.x;
  }
  // Linear probe: score_k = <proto_k, x> - |proto_k|^2 / 2.
  std::size_t correct = 0;
  for (const auto& r : ds.train) {
    ClassId best = 0;
    double best_score = -1e300;
    for (const auto& [k, w] : proto) {
      double s = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * r.x[i] - 0.5 * w[i] * w[i];
      if (s > best_score) best_score = s, best = k;
    }
    correct += best == r.label;
  }
  CHECK(correct == ds.train.size());
}

TEST_CASE("stratified_split") {
  auto make = [](std::size_t n, ClassId label) {
    std::vector<RelationInstance> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = {i, Vector{static_cast<double>(i)}, Vector{0.0}, label};
    return v;
  };
  const auto vocab = PredicateVocabulary::with_default_names(2);

  SUBCASE("single fraction keeps everything in train") {
    const std::vector<double> f{1.0};
    const auto ds = stratified_split(make(30, 0), f, 1, vocab);
    CHECK(ds.train.size() == 30);
    CHECK(ds.val.empty());
  }
  SUBCASE("80/20 on one class") {
    const std::vector<double> f{0.8, 0.2};
    const auto ds = stratified_split(make(100, 1), f, 1, vocab);
    CHECK(ds.train.size() == 80);
    CHECK(ds.val.size() == 20);
    CHECK(ds.vocabulary.train_counts == std::vector<std::uint64_t>{0, 80});
  }
  SUBCASE("deterministic under seed") {
    const std::vector<double> f{0.5, 0.25, 0.25};
    CHECK(stratified_split(make(40, 0), f, 9, vocab) == stratified_split(make(40, 0), f, 9, vocab));
  }
  SUBCASE("too-small class goes to train with a warning") {
    const std::vector<double> f{0.5, 0.25, 0.25};
    auto inst = make(40, 0);
    auto tiny = make(2, 1);
    inst.insert(inst.end(), tiny.begin(), tiny.end());
    const auto ds = stratified_split(inst, f, 3, vocab);
    CHECK(ds.vocabulary.train_counts[1] == 2);
    REQUIRE(ds.warnings.size() == 1);
    CHECK(ds.warnings[0].find("predicate_01") != std::string::npos);
  }
  SUBCASE("fractions must sum to one") {
    const std::vector<double> f{0.5, 0.2};
    CHECK_THROWS_AS(stratified_split(make(10, 0), f, 1, vocab), InvalidArgument);
  }
}

TEST_CASE("canonical_sort is independent of input order") {
  const auto ds = generate_synthetic(small_params());
  auto a = ds.train;
  auto b = ds.train;
  std::reverse(b.begin(), b.end());
  came::Rng rng(5);
  rng.shuffle(a);
  canonical_sort(a);
  canonical_sort(b);
  CHECK(a == b);
  CHECK(std::is_sorted(a.begin(), a.end(),
                       [](const RelationInstance& l, const RelationInstance& r) { return l.image_id < r.image_id; }));
}

TEST_CASE("feature dump round trip and validation") {
  const auto ds = generate_synthetic(small_params());
  const std::string text = serialize_feature_dump(ds);
  CHECK(parse_feature_dump(text) == ds);

  came::testing::TempDir dir("dump");
  save_feature_dump(ds, dir / "d.jsonl");
  CHECK(load_feature_dump(dir / "d.jsonl") == ds);
  CHECK_THROWS_AS(load_feature_dump(dir / "missing.jsonl"), IoError);

  const std::string header =
      R"({"format":"came-features","version":1,"m":2,"d_x":2,"d_c":1,"names":["a","b"]})"
      "\n";
  const std::string good = R"({"split":"train","image_id":0,"x":[0.5,1],"c":[2],"label":1})"
                           "\n";

  CHECK(parse_feature_dump(header + good).train.size() == 1);

  SUBCASE("empty train section") {
    CHECK_THROWS_AS(parse_feature_dump(header + R"({"split":"val","image_id":0,"x":[0,1],"c":[2],"label":1})"),
                    SchemaError);
  }
  SUBCASE("label out of range names the line") {
    try {
      parse_feature_dump(header + good + R"({"split":"train","image_id":0,"x":[0,1],"c":[2],"label":2})");
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(parse_feature_dump(header + R"({"split":"train","image_id":0,"x":[0],"c":[2],"label":1})"),
                    SchemaError);
  }
  SUBCASE("malformed JSON reports its line") {
    try {
      parse_feature_dump(header + good + "{not json\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("unknown field") {
    CHECK_THROWS_AS(
        parse_feature_dump(header + R"({"split":"train","image_id":0,"x":[0,1],"c":[2],"label":1,"w":3})"),
        ParseError);
  }
  SUBCASE("unknown split name") {
    CHECK_THROWS_AS(parse_feature_dump(header + R"({"split":"dev","image_id":0,"x":[0,1],"c":[2],"label":1})"),
                    ParseError);
  }
}
