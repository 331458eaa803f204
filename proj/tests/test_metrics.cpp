// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "came/error.hpp"
#include "came/metrics.hpp"
#include "metrics_oracle.hpp"
#include "support.hpp"

using namespace came;

namespace {

ImagePredictions image(ImageId id, std::vector<GtTriplet> gt, std::vector<Vector> scores) {
  ImagePredictions img;
  img.image_id = id;
  img.gt = std::move(gt);
  for (std::size_t p = 0; p < scores.size(); ++p) img.pairs.push_back({p, std::move(scores[p])});
  return img;
}

PredicateVocabulary vocab(std::vector<std::uint64_t> counts) {
  auto v = PredicateVocabulary::with_default_names(counts.size());
  v.train_counts = std::move(counts);
  return v;
}

}  // namespace

TEST_CASE("recall_at_k basics") {
  const std::vector<ImagePredictions> preds{
      image(0, {{0, 0}, {1, 1}}, {{0.9, 0.1}, {0.2, 0.8}})};
  CHECK(recall_at_k(preds, 2, true).recall == 1.0);
  CHECK(recall_at_k(preds, 1, true).recall == 0.5);
  CHECK_THROWS_AS(recall_at_k(preds, 0, true), InvalidArgument);

  SUBCASE("images without ground truth are excluded and counted") {
    auto more = preds;
    more.push_back(image(1, {}, {{0.5, 0.5}}));
    const auto r = recall_at_k(more, 1, true);
    CHECK(r.recall == 0.5);
    CHECK(r.images_without_gt == 1);
    CHECK(r.per_image.size() == 1);
  }
  SUBCASE("graph constraint keeps one predicate per pair") {
    // gt asks for the second-best predicate of pair 0.
    const std::vector<ImagePredictions> p2{image(0, {{0, 1}}, {{0.6, 0.4}})};
    CHECK(recall_at_k(p2, 5, true).recall == 0.0);
    CHECK(recall_at_k(p2, 5, false).recall == 1.0);
  }
  SUBCASE("ties break by pair id then predicate id") {
    const std::vector<ImagePredictions> p3{image(0, {{1, 0}}, {{0.5, 0.5}, {0.5, 0.5}})};
    CHECK(recall_at_k(p3, 1, true).recall == 0.0);
    CHECK(recall_at_k(p3, 2, true).recall == 1.0);
    const std::vector<ImagePredictions> p4{image(0, {{0, 1}}, {{0.5, 0.5}})};
    CHECK(recall_at_k(p4, 1, false).recall == 0.0);
    CHECK(recall_at_k(p4, 2, false).recall == 1.0);
  }
}

TEST_CASE("mean_recall_at_k basics") {
  SUBCASE("perfect predictor") {
    const std::vector<ImagePredictions> preds{
        image(0, {{0, 0}, {1, 2}}, {{1, 0, 0}, {0, 0, 1}}), image(1, {{0, 1}}, {{0, 1, 0}})};
    const auto r = mean_recall_at_k(preds, 3, true);
    CHECK(r.mean_recall == 1.0);
    for (double v : r.per_class_recall) CHECK(v == 1.0);
  }
  SUBCASE("single class equals recall on one image") {
    const std::vector<ImagePredictions> preds{
        image(0, {{0, 0}, {1, 0}, {2, 0}, {3, 0}}, {{0.9, 0.1}, {0.8, 0.2}, {0.1, 0.9}, {0.2, 0.8}})};
    const auto r = mean_recall_at_k(preds, 4, true);
    CHECK(r.mean_recall == 0.5);
    CHECK(r.mean_recall == recall_at_k(preds, 4, true).recall);
    CHECK(r.present == std::vector<bool>{true, false});
  }
}

TEST_CASE("mean_metric against published rows") {
  CHECK(mean_metric(65.5, 67.2, 15.7, 17.1) == doctest::Approx(41.375));
  CHECK(mean_metric(55.3, 57.4, 37.9, 40.1) == doctest::Approx(47.675));
  CHECK(mean_metric(55.5, 57.4, 39.4, 41.5) == doctest::Approx(48.45));
  CHECK_THROWS_AS(mean_metric(101.0, 50.0, 50.0, 50.0), InvalidArgument);
  CHECK_THROWS_AS(mean_metric(-1.0, 50.0, 50.0, 50.0), InvalidArgument);
}

TEST_CASE("var_over_mean") {
  const std::vector<bool> both{true, true};
  CHECK(var_over_mean(Vector{0.3, 0.3}, both).value == 0.0);
  CHECK(var_over_mean(Vector{0.2, 0.4}, both).value == doctest::Approx(3.3333333));
  CHECK(var_over_mean(Vector{0.7, 0.0}, std::vector<bool>{true, false}).value == 0.0);
  const auto z = var_over_mean(Vector{0.0, 0.0}, both);
  CHECK(z.zero_mean);
  CHECK(z.value == 0.0);
  CHECK_THROWS_AS(var_over_mean(Vector{0.5}, std::vector<bool>{false}), InvalidArgument);
}

TEST_CASE("group_mean_recall") {
  const auto part = partition_classes(vocab({50, 40, 30, 20, 10, 5, 4, 3, 2, 1}));
  SUBCASE("uniform recalls") {
    const auto g = group_mean_recall(Vector(10, 0.5), std::vector<bool>(10, true), part);
    CHECK(*g.head == 0.5);
    CHECK(*g.body == 0.5);
    CHECK(*g.tail == 0.5);
  }
  SUBCASE("only head classes present") {
    std::vector<bool> present(10, false);
    present[0] = present[1] = true;
    const auto g = group_mean_recall(Vector(10, 0.5), present, part);
    CHECK(g.head.has_value());
    CHECK_FALSE(g.body.has_value());
    CHECK_FALSE(g.tail.has_value());
  }
  CHECK_THROWS_AS(group_mean_recall(Vector(9, 0.5), std::vector<bool>(9, true), part), InvalidArgument);
}

TEST_CASE("validation of prediction sets") {
  auto bad = std::vector<ImagePredictions>{image(0, {{3, 0}}, {{0.5, 0.5}})};
  CHECK_THROWS_AS(validate_predictions(bad), InvalidArgument);
  bad = {image(0, {{0, 2}}, {{0.5, 0.5}})};
  CHECK_THROWS_AS(validate_predictions(bad), InvalidArgument);
  bad = {image(0, {}, {{0.5, 0.5}, {0.5}})};
  CHECK_THROWS_AS(validate_predictions(bad), InvalidArgument);
}

TEST_CASE("all metrics agree exactly with the brute-force oracle") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t m = 0;
    const auto preds = oracle::random_instance(rng, m);
    const auto counts = came::testing::random_counts(rng, m, 20);
    const auto part = partition_classes(vocab(counts));
    for (bool gc : {true, false}) {
      for (std::size_t k = 1; k <= 10; ++k) {
        const auto want = oracle::evaluate(preds, m, k, gc, counts);
        const auto r = recall_at_k(preds, k, gc);
        REQUIRE(r.per_image.size() == want.image_matched.size());
        for (std::size_t i = 0; i < r.per_image.size(); ++i) CHECK(r.per_image[i].matched == want.image_matched[i]);
        CHECK(r.images_without_gt == want.images_without_gt);
        CHECK(r.recall == want.recall);

        const auto cr = mean_recall_at_k(preds, k, gc);
        CHECK(cr.matched == want.class_matched);
        CHECK(cr.total == want.class_total);
        CHECK(cr.present == want.present);
        CHECK(cr.per_class_recall == want.per_class);
        CHECK(cr.mean_recall == want.mean_recall);

        if (std::find(want.present.begin(), want.present.end(), true) != want.present.end()) {
          const auto vm = var_over_mean(cr.per_class_recall, cr.present);
          CHECK(vm.zero_mean == !want.var_over_mean.has_value());
          if (want.var_over_mean) CHECK(vm.value == *want.var_over_mean);
        }
        CHECK(part.head == want.head_ids);
        CHECK(part.body == want.body_ids);
        CHECK(part.tail == want.tail_ids);
        const auto g = group_mean_recall(cr.per_class_recall, cr.present, part);
        CHECK(g.head == want.head);
        CHECK(g.body == want.body);
        CHECK(g.tail == want.tail);
      }
    }
  }
}

TEST_CASE("recall is non-decreasing in K and graph constraint admits one candidate per pair") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t m = 0;
    const auto preds = oracle::random_instance(rng, m);
    for (bool gc : {true, false}) {
      double prev = 0.0;
      for (std::size_t k = 1; k <= 50; ++k) {
        const double r = recall_at_k(preds, k, gc).recall;
        CHECK(r >= prev);
        prev = r;
      }
    }
    for (const auto& img : preds) {
      // Under the constraint each pair matches at most one distinct predicate.
      const auto hit = match_top_k(img, 1000, true);
      std::map<PairId, std::set<ClassId>> matched;
      for (std::size_t g = 0; g < img.gt.size(); ++g)
        if (hit[g]) matched[img.gt[g].pair_id].insert(img.gt[g].predicate);
      for (const auto& [pair, labels] : matched) CHECK(labels.size() == 1);
    }
  }
}

TEST_CASE("evaluate on a perfect hand-built classifier") {
  SynthParams sp;
  sp.num_classes = 6;
  sp.total = 600;
  sp.d_x = 6;
  sp.d_c = 3;
  sp.noise = 0.0;
  const auto ds = generate_synthetic(sp);
  CameConfig cfg;
  cfg.num_experts = 1;
  cfg.hidden_dim = 6;
  cfg.edge_dim = 2;
  cfg.ew_enabled = cfg.pw_enabled = false;
  cfg.activation = Activation::identity;
  auto p = CameParams::zeros(cfg, 6, 3, 6);
  for (std::size_t i = 0; i < 6; ++i) p.shared_weight(i, i) = 1.0;
  for (const auto& r : ds.train)
    for (std::size_t d = 0; d < 6; ++d) p.experts[0].weight(r.label, d) = 10.0 * r.x[d];
  const std::vector<std::size_t> ks{5, 10, 20};
  const auto rep = evaluate(p, cfg, ds.test, ks, ds.vocabulary);
  for (const auto& a : rep.at) {
    if (a.k >= sp.pairs_per_image) {
      CHECK(a.recall == 1.0);
      CHECK(a.mean_recall == 1.0);
      CHECK(a.var_over_mean.value == 0.0);
    }
  }
  CHECK(rep.mean == doctest::Approx(100.0));
  CHECK(serialize_eval_report(rep) == serialize_eval_report(evaluate(p, cfg, ds.test, ks, ds.vocabulary)));
}

TEST_CASE("constant classifier under the graph constraint") {
  std::vector<ImagePredictions> preds;
  for (ImageId i = 0; i < 4; ++i) {
    ImagePredictions img;
    img.image_id = i;
    for (PairId p = 0; p < 3; ++p) {
      img.pairs.push_back({p, Vector{0.4, 0.3, 0.3}});
      img.gt.push_back({p, static_cast<ClassId>((i + p) % 3)});
    }
    preds.push_back(img);
  }
  const std::vector<std::size_t> ks{1, 3};
  const auto rep = evaluate_predictions(preds, ks, true, vocab({5, 4, 3}));
  CHECK(rep.metrics_at(3).per_class_recall == Vector{1.0, 0.0, 0.0});
  // With K=1 only pair 0 of each image is kept; that pair carries class 0 in
  // images 0 and 3, out of four class-0 triplets overall.
  const auto& k1 = rep.metrics_at(1).per_class_recall;
  CHECK(k1[0] == 0.5);
  CHECK(k1[1] == 0.0);
}

TEST_CASE("report serialization round trip") {
  Rng rng(5);
  std::size_t m = 0;
  std::vector<ImagePredictions> preds;
  do {
    preds = oracle::random_instance(rng, m);
  } while (recall_at_k(preds, 1, true).per_image.empty());
  const std::vector<std::size_t> ks{1, 3, 5};
  const auto rep = evaluate_predictions(preds, ks, true, vocab(came::testing::random_counts(rng, m, 30)));
  const std::string text = serialize_eval_report(rep);
  CHECK(serialize_eval_report(parse_eval_report(text)) == text);
  CHECK(text.find("\"mean_recall_at\"") != std::string::npos);
  CHECK_THROWS(parse_eval_report("{}"));
}

TEST_CASE("prediction dump parsing") {
  const std::string dump =
      R"({"image_id":2,"pair_id":0,"gt_label":1,"scores":[0.1,0.9]})"
      "\n"
      R"({"image_id":1,"pair_id":5,"scores":[0.6,0.4]})"
      "\n"
      R"({"image_id":1,"pair_id":3,"gt_label":0,"scores":[0.7,0.3]})"
      "\n";
  const auto preds = parse_prediction_dump(dump);
  REQUIRE(preds.size() == 2);
  CHECK(preds[0].image_id == 1);
  CHECK(preds[0].pairs.size() == 2);
  CHECK(preds[0].gt.size() == 1);
  CHECK(parse_prediction_dump(serialize_prediction_dump(preds)).size() == 2);

  CHECK_THROWS_AS(parse_prediction_dump(R"({"image_id":1,"pair_id":0,"scores":[1],"extra":1})"), ParseError);
  CHECK_THROWS_AS(parse_prediction_dump(R"({"image_id":1,"scores":[1]})"), ParseError);
  CHECK_THROWS(parse_prediction_dump(R"({"image_id":1,"pair_id":0,"scores":[1]})"
                                     "\n"
                                     R"({"image_id":1,"pair_id":0,"scores":[1]})"));
}
