// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <fstream>

#include "came/checkpoint.hpp"
#include "came/config.hpp"
#include "came/error.hpp"
#include "came/gradcheck.hpp"
#include "came/report.hpp"
#include "support.hpp"

using namespace came;

TEST_CASE("run config parsing") {
  const std::string text = R"(# comment
[model]
num_experts = 4
pw_temperature = 1/4
ew_enabled = false

; another comment
[train]
epochs = 3
learning_rate = 0.02

[eval]
ks = 1, 2, 3
split = val

[run]
seed = 99
)";
  const auto c = parse_run_config(text);
  CHECK(c.model.num_experts == 4);
  CHECK(c.model.pw_temperature == 0.25);
  CHECK_FALSE(c.model.ew_enabled);
  CHECK(c.train.epochs == 3);
  CHECK(c.eval.ks == std::vector<std::size_t>{1, 2, 3});
  CHECK(c.eval.split == SplitName::val);
  CHECK(c.seed == 99);
  CHECK(c.train_config().seed == 99);
  CHECK(c.synth_params().seed == 99);

  SUBCASE("canonical text round trip") {
    const std::string canon = to_text(c);
    const auto again = parse_run_config(canon);
    CHECK(to_text(again) == canon);
    CHECK(again.model == c.model);
    CHECK(again.train == c.train);
  }
  SUBCASE("every key can be read back") {
    for (const auto& k : RunConfig::keys()) CHECK_NOTHROW(c.get(k));
  }
}

TEST_CASE("run config errors carry line numbers") {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse_run_config(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("[model]\nnum_experts = 3\nbogus = 1\n") == 3);
  CHECK(line_of("[nosuch]\n") == 1);
  CHECK(line_of("num_experts = 3\n") == 1);
  CHECK(line_of("[train]\nepochs = many\n") == 2);
  CHECK(line_of("[train]\nepochs\n") == 2);
  CHECK(line_of("[model\n") == 1);
  CHECK(line_of("[model]\new_enabled = yes\n") == 2);
  CHECK_THROWS_AS(load_run_config("/nonexistent/came.ini"), IoError);
}

TEST_CASE("run config validation") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  c.set("data.total", "10");
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = RunConfig{};
  c.set("model.num_experts", "9");
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = RunConfig{};
  CHECK_THROWS_AS(c.set("model.nope", "1"), InvalidArgument);
  CHECK_THROWS_AS(c.set("eval.ks", "5,,10"), InvalidArgument);
  c.set("data.split_fractions", "0.5, 0.25, 0.25");
  CHECK(c.get("data.split_fractions") == "0.5, 0.25, 0.25");
}

TEST_CASE("checkpoint round trip and corruption") {
  CameConfig cfg;
  cfg.num_experts = 2;
  cfg.hidden_dim = 3;
  cfg.edge_dim = 2;
  auto vocab = PredicateVocabulary::with_default_names(4);
  vocab.train_counts = {9, 5, 2, 1};
  Checkpoint ck{cfg, vocab, 5, 3, CameParams::initialize(cfg, 5, 3, 4, 1), std::nullopt};
  const std::string bytes = serialize_checkpoint(ck);
  CHECK(bytes.substr(0, 8) == "CAMECKPT");
  CHECK(parse_checkpoint(bytes) == ck);

  ck.train_state = TrainState{7, OptimizerState{CameParams::initialize(cfg, 5, 3, 4, 2), 123}};
  const std::string with_state = serialize_checkpoint(ck);
  CHECK(parse_checkpoint(with_state) == ck);

  came::testing::TempDir dir("ckpt");
  save_checkpoint(ck, dir / "m.ckpt");
  CHECK(load_checkpoint(dir / "m.ckpt") == ck);
  CHECK_THROWS_AS(load_checkpoint(dir / "none.ckpt"), IoError);

  CHECK_THROWS_AS(parse_checkpoint(with_state.substr(0, with_state.size() - 3)), SchemaError);
  CHECK_THROWS_AS(parse_checkpoint(with_state + "x"), SchemaError);
  std::string bad = with_state;
  bad[0] = 'X';
  CHECK_THROWS_AS(parse_checkpoint(bad), SchemaError);
  bad = with_state;
  bad[8] = 2;  // version
  CHECK_THROWS_AS(parse_checkpoint(bad), SchemaError);
}

TEST_CASE("per-class report tables") {
  std::vector<ImagePredictions> preds(1);
  preds[0].image_id = 0;
  for (PairId p = 0; p < 4; ++p) {
    Vector s(4, 0.0);
    s[p] = 1.0;
    preds[0].pairs.push_back({p, s});
    if (p < 3) preds[0].gt.push_back({p, static_cast<ClassId>(p)});
  }
  auto vocab = PredicateVocabulary::with_default_names(4);
  vocab.names[1] = "on, top";
  vocab.train_counts = {10, 8, 4, 2};
  const std::vector<std::size_t> ks{2, 4};
  const auto rep = evaluate_predictions(preds, ks, true, vocab);

  const std::string csv = per_class_recall_csv(rep);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(csv.rfind("class_id,name,group,train_count,gt_count,present,recall@2,recall@4\n", 0) == 0);
  CHECK(csv.find("\"on, top\"") != std::string::npos);
  CHECK(csv.find("0,predicate_00,head,10,1,true,1.000000,1.000000") != std::string::npos);
  CHECK(csv.find(",2,0,false,,\n") != std::string::npos);

  const std::string svg = per_class_recall_svg(rep);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("on, top") != std::string::npos);

  const std::string md = summary_markdown(rep);
  CHECK(md.find("| 4 | ") != std::string::npos);
  CHECK(percent(0.4567) == "45.7");
}

TEST_CASE("gradient check suite") {
  GradcheckConfig g;
  CameConfig full;
  const auto res = run_gradcheck(g, full, 7);
  CHECK(res.passed);
  CHECK(res.entries.size() >= 4 + 4 * 6);
  for (const auto& e : res.entries) {
    INFO(e.check << " " << e.group << " " << e.max_relative_error);
    CHECK(e.max_relative_error < 1e-4);
    CHECK(e.points == 20);
  }

  SUBCASE("a flipped gradient is caught and named") {
    g.inject_sign_flip = "gate";
    const auto bad = run_gradcheck(g, full, 7);
    CHECK_FALSE(bad.passed);
    const auto failing = bad.failing();
    CHECK(std::find_if(failing.begin(), failing.end(), [](const std::string& s) {
            return s.find("gate") != std::string::npos;
          }) != failing.end());
  }
  SUBCASE("single expert without gates") {
    CameConfig plain;
    plain.num_experts = 1;
    plain.ew_enabled = plain.pw_enabled = false;
    CHECK(run_gradcheck(g, plain, 3).passed);
  }
  SUBCASE("unknown group") {
    g.inject_sign_flip = "nonexistent";
    CHECK_THROWS_AS(run_gradcheck(g, full, 7), InvalidArgument);
  }
}
