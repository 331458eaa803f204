// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "temp_dir.hpp"

namespace fs = std::filesystem;
using came::testing::TempDir;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run came_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" CAME_CLI_PATH "\" " + args + " 2>&1";
  Run r;
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int st = ::pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

const char* kSmall =
    " --set data.total=500 --set data.num_classes=6 --set model.hidden_dim=8 --set model.edge_dim=4"
    " --set train.warmup_steps=10 --set eval.ks=1,2";

}  // namespace

TEST_CASE("exit codes") {
  TempDir dir("cli_codes");
  CHECK(came_cli("--help").code == 0);
  CHECK(came_cli("nosuchcommand").code == 2);
  CHECK(came_cli("train --set model.bogus=1 --out " + q(dir / "a")).code == 2);
  CHECK(came_cli("synth --set data.total=3 --out " + q(dir / "b")).code == 2);
  CHECK(came_cli("eval --model " + q(dir / "missing.ckpt") + " --out " + q(dir / "c")).code == 2);
  CHECK(came_cli("gradcheck --out " + q(dir / "d")).code == 0);
  const Run bad = came_cli("gradcheck --inject-sign-flip rel_gate --out " + q(dir / "e"));
  CHECK(bad.code == 1);
  CHECK(bad.out.find("rel_gate") != std::string::npos);
  const Run div = came_cli(std::string("train") + kSmall +
                           " --set train.learning_rate=1e200 --set train.warmup_factor=1 --out " + q(dir / "f"));
  CHECK(div.code == 3);
  CHECK(div.out.find("step") != std::string::npos);
  CHECK(fs::exists(dir / "f" / "train_log.jsonl"));
}

TEST_CASE("config file and precedence") {
  TempDir dir("cli_cfg");
  {
    std::ofstream(dir / "run.ini") << "[data]\ntotal = 300\nnum_classes = 5\n[run]\nseed = 3\n";
  }
  const Run a = came_cli("synth --config " + q(dir / "run.ini") + " --out " + q(dir / "a"));
  REQUIRE(a.code == 0);
  CHECK(a.out.find("classes=5") != std::string::npos);
  // --set beats the file, the environment beats the file, --seed beats --set.
  const Run b = came_cli("synth --config " + q(dir / "run.ini") + " --set data.num_classes=4 --out " + q(dir / "b"),
                         "CAME_SEED=3");
  REQUIRE(b.code == 0);
  CHECK(b.out.find("classes=4") != std::string::npos);
  CHECK(slurp(dir / "a" / "dataset.jsonl") != slurp(dir / "b" / "dataset.jsonl"));

  REQUIRE(came_cli("synth --config " + q(dir / "run.ini"), "CAME_SEED=9 CAME_OUT=" + q(dir / "env")).code == 0);
  REQUIRE(came_cli("synth --config " + q(dir / "run.ini") + " --seed 9 --out " + q(dir / "flag")).code == 0);
  CHECK(slurp(dir / "env" / "dataset.jsonl") == slurp(dir / "flag" / "dataset.jsonl"));
  CHECK(slurp(dir / "env" / "dataset.jsonl") != slurp(dir / "a" / "dataset.jsonl"));

  {
    std::ofstream(dir / "broken.ini") << "[data]\ntotal 300\n";
  }
  const Run c = came_cli("synth --config " + q(dir / "broken.ini") + " --out " + q(dir / "c"));
  CHECK(c.code == 2);
  CHECK(c.out.find("line 2") != std::string::npos);
}

TEST_CASE("synth, train, eval and report files") {
  TempDir dir("cli_flow");
  REQUIRE(came_cli(std::string("synth") + kSmall + " --out " + q(dir / "s")).code == 0);
  const fs::path data = dir / "s" / "dataset.jsonl";
  const std::string tsv = slurp(dir / "s" / "vocabulary.tsv");
  CHECK(std::count(tsv.begin(), tsv.end(), '\n') >= 6);

  REQUIRE(came_cli(std::string("train") + kSmall + " --set train.epochs=2 --data " + q(data) + " --out " + q(dir / "t"))
              .code == 0);
  const std::string log = slurp(dir / "t" / "train_log.jsonl");
  CHECK(std::count(log.begin(), log.end(), '\n') == 2);
  CHECK(log.find("\"val\":{") != std::string::npos);

  const Run ev = came_cli(std::string("eval") + kSmall + " --model " + q(dir / "t" / "model.ckpt") + " --data " +
                          q(data) + " --out " + q(dir / "e"));
  REQUIRE(ev.code == 0);
  CHECK(ev.out.find("R@K") != std::string::npos);
  const std::string csv = slurp(dir / "e" / "per_class_recall.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
  CHECK(slurp(dir / "e" / "per_class_recall.svg").rfind("<svg", 0) == 0);

  const Run rep = came_cli("report --report " + q(dir / "e" / "report.json") + " --out " + q(dir / "r"));
  REQUIRE(rep.code == 0);
  CHECK(slurp(dir / "r" / "report.json") == slurp(dir / "e" / "report.json"));
  CHECK(slurp(dir / "r" / "per_class_recall.csv") == csv);
}

TEST_CASE("identical seeds give byte-identical artifacts; resume matches") {
  TempDir dir("cli_det");
  const std::string common = std::string(kSmall) + " --seed 21";
  for (const char* o : {"a", "b"}) {
    REQUIRE(came_cli("train" + common + " --set train.epochs=3 --out " + q(dir / o)).code == 0);
    REQUIRE(came_cli("eval" + common + " --model " + q(dir / o / "model.ckpt") + " --out " + q(dir / o / "ev")).code ==
            0);
  }
  CHECK(slurp(dir / "a" / "model.ckpt") == slurp(dir / "b" / "model.ckpt"));
  CHECK(slurp(dir / "a" / "ev" / "report.json") == slurp(dir / "b" / "ev" / "report.json"));

  REQUIRE(came_cli("train" + common + " --set train.epochs=1 --out " + q(dir / "p1")).code == 0);
  REQUIRE(came_cli("train" + common + " --set train.epochs=3 --resume " + q(dir / "p1" / "model.ckpt") + " --out " +
                   q(dir / "p2"))
              .code == 0);
  CHECK(slurp(dir / "p2" / "model.ckpt") == slurp(dir / "a" / "model.ckpt"));
}

TEST_CASE("evaluating a prediction dump") {
  TempDir dir("cli_dump");
  {
    std::ofstream f(dir / "preds.jsonl");
    f << R"({"image_id":1,"pair_id":0,"gt_label":0,"scores":[0.9,0.1,0.0]})" "\n"
      << R"({"image_id":1,"pair_id":1,"gt_label":2,"scores":[0.8,0.15,0.05]})" "\n"
      << R"({"image_id":2,"pair_id":0,"gt_label":1,"scores":[0.2,0.7,0.1]})" "\n";
  }
  const Run r = came_cli("eval --predictions " + q(dir / "preds.jsonl") + " --set eval.ks=1,2 --out " + q(dir / "o"));
  REQUIRE(r.code == 0);
  const std::string csv = slurp(dir / "o" / "per_class_recall.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  {
    std::ofstream(dir / "bad.jsonl") << R"({"image_id":1,"pair_id":0,"scores":[0.9,"x"]})" "\n";
  }
  CHECK(came_cli("eval --predictions " + q(dir / "bad.jsonl") + " --out " + q(dir / "p")).code == 2);
}
