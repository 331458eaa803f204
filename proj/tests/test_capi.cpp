// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

// Exercises the shared library through its C header only.

#include <doctest.h>

#include <came/came.h>

#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  came_string_free(s);
  return out;
}

fs::path scratch(const char* name) {
  fs::path p = fs::temp_directory_path() / ("came_capi_" + std::string(name) + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

came_config* small_config() {
  came_config* cfg = nullptr;
  const char* text =
      "[data]\nnum_classes = 6\ntotal = 400\nd_x = 5\nd_c = 3\n"
      "[model]\nhidden_dim = 6\nedge_dim = 3\nnum_experts = 2\n"
      "[train]\nepochs = 2\nwarmup_steps = 5\n"
      "[eval]\nks = 1, 2\n"
      "[run]\nseed = 11\n";
  REQUIRE(came_config_parse(text, &cfg) == CAME_OK);
  return cfg;
}

void count_lines(const char* line, void* user) {
  CHECK(line[0] == '{');
  ++*static_cast<int*>(user);
}

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::strcmp(came_version(), "1.0.0") == 0);
  CHECK(std::strcmp(came_status_name(CAME_OK), "ok") == 0);
  CHECK(std::strlen(came_status_name(CAME_ERR_SCHEMA)) > 0);
}

TEST_CASE("config errors map to statuses") {
  came_config* cfg = nullptr;
  CHECK(came_config_parse("[model]\nnum_experts = x\n", &cfg) == CAME_ERR_PARSE);
  CHECK(cfg == nullptr);
  CHECK(std::string(came_last_error()).find("2") != std::string::npos);
  CHECK(came_config_load("/nonexistent/x.ini", &cfg) == CAME_ERR_IO);
  CHECK(came_config_parse(nullptr, &cfg) == CAME_ERR_INVALID_ARGUMENT);

  REQUIRE(came_config_new(&cfg) == CAME_OK);
  CHECK(came_config_set(cfg, "model.unknown", "1") == CAME_ERR_INVALID_ARGUMENT);
  CHECK(std::string(came_last_error()).find("model.unknown") != std::string::npos);
  CHECK(came_config_set(cfg, "data.total", "5") == CAME_OK);
  CHECK(came_config_validate(cfg) == CAME_ERR_INVALID_ARGUMENT);
  char* v = nullptr;
  REQUIRE(came_config_get(cfg, "data.total", &v) == CAME_OK);
  CHECK(take(v) == "5");
  REQUIRE(came_config_to_text(cfg, &v) == CAME_OK);
  CHECK(take(v).find("[data]") != std::string::npos);
  came_config_free(cfg);
}

TEST_CASE("dataset, model, evaluation lifecycle") {
  const fs::path dir = scratch("life");
  came_config* cfg = small_config();

  came_dataset* ds = nullptr;
  REQUIRE(came_dataset_synthesize(cfg, &ds) == CAME_OK);
  came_dataset_info info{};
  REQUIRE(came_dataset_get_info(ds, &info) == CAME_OK);
  CHECK(info.num_classes == 6);
  CHECK(info.d_x == 5);
  CHECK(info.num_train + info.num_val + info.num_test == 400);
  std::vector<uint64_t> counts(6);
  REQUIRE(came_dataset_class_counts(ds, counts.data(), counts.size()) == CAME_OK);
  CHECK(counts[0] >= counts[5]);
  char* name = nullptr;
  REQUIRE(came_dataset_class_name(ds, 0, &name) == CAME_OK);
  CHECK(take(name) == "predicate_00");
  CHECK(came_dataset_class_name(ds, 6, &name) == CAME_ERR_INVALID_ARGUMENT);

  const std::string dump = (dir / "ds.jsonl").string();
  REQUIRE(came_dataset_save(ds, dump.c_str()) == CAME_OK);
  came_dataset* ds2 = nullptr;
  REQUIRE(came_dataset_load(dump.c_str(), &ds2) == CAME_OK);

  came_model* model = nullptr;
  REQUIRE(came_model_init(cfg, ds, &model) == CAME_OK);
  int epochs = 0;
  int64_t failed = -1;
  REQUIRE(came_model_train(model, cfg, ds2, count_lines, &epochs, &failed) == CAME_OK);
  CHECK(epochs == 2);
  CHECK(failed == -1);
  came_model_info mi{};
  REQUIRE(came_model_get_info(model, &mi) == CAME_OK);
  CHECK(mi.epochs_completed == 2);
  CHECK(mi.optimizer_step > 0);
  CHECK(mi.num_experts == 2);

  std::vector<double> x(5, 0.1), c(3, -0.2), logits(6);
  CHECK(came_model_predict(model, x.data(), 5, c.data(), 3, logits.data(), 6) == CAME_OK);
  CHECK(came_model_predict(model, x.data(), 4, c.data(), 3, logits.data(), 6) == CAME_ERR_INVALID_ARGUMENT);

  const std::string ckpt = (dir / "m.ckpt").string();
  REQUIRE(came_model_save(model, ckpt.c_str()) == CAME_OK);
  came_model* loaded = nullptr;
  REQUIRE(came_model_load(ckpt.c_str(), &loaded) == CAME_OK);
  std::vector<double> again(6);
  REQUIRE(came_model_predict(loaded, x.data(), 5, c.data(), 3, again.data(), 6) == CAME_OK);
  CHECK(again == logits);

  came_report* rep = nullptr;
  REQUIRE(came_evaluate(loaded, ds, cfg, &rep) == CAME_OK);
  double r = 0, mr = 0, mean = 0;
  REQUIRE(came_report_recall(rep, 2, &r, &mr) == CAME_OK);
  CHECK(r >= 0.0);
  CHECK(r <= 1.0);
  CHECK(came_report_recall(rep, 3, &r, &mr) == CAME_ERR_INVALID_ARGUMENT);
  REQUIRE(came_report_mean(rep, &mean) == CAME_OK);
  char* text = nullptr;
  REQUIRE(came_report_to_csv(rep, &text) == CAME_OK);
  CHECK(take(text).find("class_id") == 0);
  REQUIRE(came_report_to_json(rep, &text) == CAME_OK);
  const std::string json = take(text);
  {
    std::ofstream(dir / "report.json") << json;
  }
  came_report* rep2 = nullptr;
  REQUIRE(came_report_load((dir / "report.json").string().c_str(), &rep2) == CAME_OK);
  REQUIRE(came_report_to_json(rep2, &text) == CAME_OK);
  CHECK(take(text) == json);

  // A config whose model section differs is refused.
  came_config_set(cfg, "model.num_experts", "3");
  CHECK(came_model_train(loaded, cfg, ds, nullptr, nullptr, nullptr) == CAME_ERR_INVALID_ARGUMENT);

  came_report_free(rep2);
  came_report_free(rep);
  came_model_free(loaded);
  came_model_free(model);
  came_dataset_free(ds2);
  came_dataset_free(ds);
  came_config_free(cfg);
  fs::remove_all(dir);
}

TEST_CASE("corrupt checkpoint is a schema error") {
  const fs::path dir = scratch("corrupt");
  {
    std::ofstream(dir / "bad.ckpt") << "not a checkpoint";
  }
  came_model* m = nullptr;
  CHECK(came_model_load((dir / "bad.ckpt").string().c_str(), &m) == CAME_ERR_SCHEMA);
  CHECK(came_model_load((dir / "missing.ckpt").string().c_str(), &m) == CAME_ERR_IO);
  fs::remove_all(dir);
}

TEST_CASE("divergent training reports the failing step") {
  came_config* cfg = small_config();
  came_config_set(cfg, "train.learning_rate", "1e200");
  came_config_set(cfg, "train.warmup_factor", "1");
  came_dataset* ds = nullptr;
  REQUIRE(came_dataset_synthesize(cfg, &ds) == CAME_OK);
  came_model* model = nullptr;
  REQUIRE(came_model_init(cfg, ds, &model) == CAME_OK);
  int64_t failed = -1;
  CHECK(came_model_train(model, cfg, ds, nullptr, nullptr, &failed) == CAME_ERR_TRAINING);
  CHECK(failed >= 0);
  CHECK(std::string(came_last_error()).find("step") != std::string::npos);
  came_model_free(model);
  came_dataset_free(ds);
  came_config_free(cfg);
}

TEST_CASE("gradient check through the C API") {
  came_config* cfg = nullptr;
  REQUIRE(came_config_new(&cfg) == CAME_OK);
  char* text = nullptr;
  CHECK(came_gradcheck(cfg, &text) == CAME_OK);
  take(text);
  came_config_set(cfg, "gradcheck.inject_sign_flip", "edge");
  CHECK(came_gradcheck(cfg, &text) == CAME_ERR_CHECK_FAILED);
  CHECK(take(text).find("failing groups:") != std::string::npos);
  came_config_free(cfg);
}
