// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Talks to the library exclusively through came.h.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "came/came.h"

namespace fs = std::filesystem;

namespace {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kInvalidInput = 2, kTrainingFailed = 3 };

struct CliFailure {
  int code;
  std::string message;
};

int exit_code_for(came_status s) {
  switch (s) {
    case CAME_OK: return kOk;
    case CAME_ERR_CHECK_FAILED: return kCheckFailed;
    case CAME_ERR_TRAINING:
    case CAME_ERR_INTERNAL: return kTrainingFailed;
    default: return kInvalidInput;
  }
}

void check(came_status s, const std::string& context) {
  if (s != CAME_OK)
    throw CliFailure{exit_code_for(s), context + ": " + came_status_name(s) + ": " + came_last_error()};
}

struct ConfigDeleter {
  void operator()(came_config* p) const { came_config_free(p); }
};
struct DatasetDeleter {
  void operator()(came_dataset* p) const { came_dataset_free(p); }
};
struct ModelDeleter {
  void operator()(came_model* p) const { came_model_free(p); }
};
struct ReportDeleter {
  void operator()(came_report* p) const { came_report_free(p); }
};
struct StringDeleter {
  void operator()(char* p) const { came_string_free(p); }
};
using ConfigPtr = std::unique_ptr<came_config, ConfigDeleter>;
using DatasetPtr = std::unique_ptr<came_dataset, DatasetDeleter>;
using ModelPtr = std::unique_ptr<came_model, ModelDeleter>;
using ReportPtr = std::unique_ptr<came_report, ReportDeleter>;

std::string take(char* s) {
  std::unique_ptr<char, StringDeleter> owner(s);
  return s ? std::string(s) : std::string();
}

// Options shared by every subcommand.
struct Common {
  std::string config_path;
  std::optional<std::string> seed;
  std::optional<std::string> out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "Run configuration file")->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "Master seed (overrides CAME_SEED and run.seed)");
  sub->add_option("--out", c.out, "Output directory (overrides CAME_OUT and run.out)");
  sub->add_option("--set", c.overrides, "Override a config entry, e.g. --set train.epochs=5");
}

// Precedence, lowest first: built-in defaults, config file, environment
// (seed and output directory only), --set, then --seed / --out.
ConfigPtr build_config(const Common& c) {
  came_config* raw = nullptr;
  if (c.config_path.empty())
    check(came_config_new(&raw), "config");
  else
    check(came_config_load(c.config_path.c_str(), &raw), "config '" + c.config_path + "'");
  ConfigPtr cfg(raw);
  // Empty variables count as unset.
  for (const auto& [var, key] : {std::pair{"CAME_SEED", "run.seed"}, std::pair{"CAME_OUT", "run.out"}}) {
    const char* env = std::getenv(var);
    if (env && *env) check(came_config_set(cfg.get(), key, env), var);
  }
  for (const auto& ov : c.overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos) throw CliFailure{kInvalidInput, "--set expects key=value, got '" + ov + "'"};
    check(came_config_set(cfg.get(), ov.substr(0, eq).c_str(), ov.substr(eq + 1).c_str()), "--set " + ov);
  }
  if (c.seed) check(came_config_set(cfg.get(), "run.seed", c.seed->c_str()), "--seed");
  if (c.out) check(came_config_set(cfg.get(), "run.out", c.out->c_str()), "--out");
  check(came_config_validate(cfg.get()), "config");
  return cfg;
}

std::string config_value(const came_config* cfg, const char* key) {
  char* v = nullptr;
  check(came_config_get(cfg, key, &v), key);
  return take(v);
}

fs::path output_dir(const came_config* cfg) {
  fs::path dir = config_value(cfg, "run.out");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw CliFailure{kInvalidInput, "cannot create output directory '" + dir.string() + "': " + ec.message()};
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CliFailure{kInvalidInput, "cannot write '" + path.string() + "'"};
  f << text;
  f.close();
  if (!f) throw CliFailure{kInvalidInput, "write failed for '" + path.string() + "'"};
}

DatasetPtr obtain_dataset(const came_config* cfg, const std::string& data_flag) {
  std::string path = data_flag.empty() ? config_value(cfg, "data.path") : data_flag;
  came_dataset* raw = nullptr;
  if (path.empty()) {
    check(came_dataset_synthesize(cfg, &raw), "synthesize");
  } else {
    check(came_dataset_load(path.c_str(), &raw), "dataset '" + path + "'");
  }
  DatasetPtr ds(raw);
  came_dataset_info info{};
  check(came_dataset_get_info(ds.get(), &info), "dataset");
  for (size_t i = 0; i < info.num_warnings; ++i) {
    char* w = nullptr;
    check(came_dataset_warning(ds.get(), i, &w), "dataset");
    std::cerr << "warning: " << take(w) << "\n";
  }
  return ds;
}

void write_report_files(const came_report* report, const fs::path& dir, const std::string& stem) {
  char* text = nullptr;
  check(came_report_to_json(report, &text), "report");
  write_text(dir / (stem + ".json"), take(text));
  check(came_report_to_csv(report, &text), "report");
  write_text(dir / "per_class_recall.csv", take(text));
  check(came_report_to_svg(report, &text), "report");
  write_text(dir / "per_class_recall.svg", take(text));
  check(came_report_to_markdown(report, &text), "report");
  std::cout << take(text);
}

int cmd_synth(const Common& c) {
  auto cfg = build_config(c);
  const auto dir = output_dir(cfg.get());
  came_dataset* raw = nullptr;
  check(came_dataset_synthesize(cfg.get(), &raw), "synthesize");
  DatasetPtr ds(raw);
  const auto dump = dir / "dataset.jsonl";
  check(came_dataset_save(ds.get(), dump.string().c_str()), "save");

  came_dataset_info info{};
  check(came_dataset_get_info(ds.get(), &info), "dataset");
  std::vector<uint64_t> counts(info.num_classes);
  check(came_dataset_class_counts(ds.get(), counts.data(), counts.size()), "dataset");
  uint64_t largest = 1;
  for (auto n : counts) largest = std::max(largest, n);

  std::string vocab = "class_id\tname\ttrain_count\n";
  std::printf("train=%zu val=%zu test=%zu classes=%zu d_x=%zu d_c=%zu\n", info.num_train, info.num_val,
              info.num_test, info.num_classes, info.d_x, info.d_c);
  for (size_t i = 0; i < counts.size(); ++i) {
    char* name = nullptr;
    check(came_dataset_class_name(ds.get(), i, &name), "dataset");
    const std::string n = take(name);
    vocab += std::to_string(i) + "\t" + n + "\t" + std::to_string(counts[i]) + "\n";
    const auto bar = static_cast<size_t>(40.0 * static_cast<double>(counts[i]) / static_cast<double>(largest) + 0.5);
    std::printf("%-14s %7llu %s\n", n.c_str(), static_cast<unsigned long long>(counts[i]),
                std::string(std::max<size_t>(bar, 1), '#').c_str());
  }
  write_text(dir / "vocabulary.tsv", vocab);
  std::printf("wrote %s\n", dump.string().c_str());
  return kOk;
}

struct LogSink {
  std::string text;
};

void on_epoch(const char* line, void* user) {
  static_cast<LogSink*>(user)->text += std::string(line) + "\n";
  std::fprintf(stderr, "%s\n", line);
}

int cmd_train(const Common& c, const std::string& data, const std::string& resume) {
  auto cfg = build_config(c);
  const auto dir = output_dir(cfg.get());
  auto ds = obtain_dataset(cfg.get(), data);

  came_model* raw = nullptr;
  if (resume.empty())
    check(came_model_init(cfg.get(), ds.get(), &raw), "init");
  else
    check(came_model_load(resume.c_str(), &raw), "checkpoint '" + resume + "'");
  ModelPtr model(raw);

  LogSink log;
  int64_t failed_step = -1;
  const came_status st = came_model_train(model.get(), cfg.get(), ds.get(), on_epoch, &log, &failed_step);
  write_text(dir / "train_log.jsonl", log.text);
  if (st == CAME_ERR_TRAINING)
    throw CliFailure{kTrainingFailed, "training aborted at step " + std::to_string(failed_step) + ": " +
                                          came_last_error()};
  check(st, "train");

  const auto ckpt = dir / "model.ckpt";
  check(came_model_save(model.get(), ckpt.string().c_str()), "save");

  came_dataset_info info{};
  check(came_dataset_get_info(ds.get(), &info), "dataset");
  if (info.num_val > 0) {
    check(came_config_set(cfg.get(), "eval.split", "val"), "config");
    came_report* rep = nullptr;
    check(came_evaluate(model.get(), ds.get(), cfg.get(), &rep), "evaluate");
    ReportPtr report(rep);
    char* text = nullptr;
    check(came_report_to_json(report.get(), &text), "report");
    write_text(dir / "val_report.json", take(text));
  }
  std::printf("wrote %s\n", ckpt.string().c_str());
  return kOk;
}

int cmd_eval(const Common& c, const std::string& model_path, const std::string& data, const std::string& predictions,
             const std::string& split) {
  auto cfg = build_config(c);
  if (!split.empty()) check(came_config_set(cfg.get(), "eval.split", split.c_str()), "--split");
  const auto dir = output_dir(cfg.get());
  came_report* rep = nullptr;
  if (!predictions.empty()) {
    DatasetPtr vocab;
    const std::string path = data.empty() ? config_value(cfg.get(), "data.path") : data;
    if (!path.empty()) vocab = obtain_dataset(cfg.get(), path);
    check(came_evaluate_predictions(predictions.c_str(), vocab.get(), cfg.get(), &rep), "predictions");
  } else {
    if (model_path.empty()) throw CliFailure{kInvalidInput, "eval needs --model or --predictions"};
    came_model* raw = nullptr;
    check(came_model_load(model_path.c_str(), &raw), "checkpoint '" + model_path + "'");
    ModelPtr model(raw);
    auto ds = obtain_dataset(cfg.get(), data);
    check(came_evaluate(model.get(), ds.get(), cfg.get(), &rep), "evaluate");
  }
  ReportPtr report(rep);
  write_report_files(report.get(), dir, "report");
  return kOk;
}

int cmd_gradcheck(const Common& c, const std::string& flip) {
  auto cfg = build_config(c);
  if (!flip.empty()) check(came_config_set(cfg.get(), "gradcheck.inject_sign_flip", flip.c_str()), "--inject-sign-flip");
  char* text = nullptr;
  const came_status st = came_gradcheck(cfg.get(), &text);
  const std::string report = take(text);
  std::cout << report;
  if (st == CAME_ERR_CHECK_FAILED) {
    std::cerr << "gradient check failed\n";
    return kCheckFailed;
  }
  check(st, "gradcheck");
  return kOk;
}

int cmd_ablate(const Common& c, const std::string& data) {
  auto cfg = build_config(c);
  const auto dir = output_dir(cfg.get());
  auto ds = obtain_dataset(cfg.get(), data);
  char* md = nullptr;
  char* js = nullptr;
  check(came_ablate(cfg.get(), ds.get(), &md, &js), "ablate");
  const std::string table = take(md);
  write_text(dir / "ablation.md", table);
  write_text(dir / "ablation.json", take(js));
  std::cout << table;
  return kOk;
}

int cmd_report(const Common& c, const std::string& report_path) {
  auto cfg = build_config(c);
  const auto dir = output_dir(cfg.get());
  came_report* rep = nullptr;
  check(came_report_load(report_path.c_str(), &rep), "report '" + report_path + "'");
  ReportPtr report(rep);
  write_report_files(report.get(), dir, "report");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Context-aware mixture-of-experts relation classifier"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(came_version()));

  Common common;
  std::string data, resume, model, predictions, split, flip, report_path;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic long-tailed feature dump");
  add_common(synth, common);

  auto* train = app.add_subcommand("train", "Train a model (optionally resuming a checkpoint)");
  add_common(train, common);
  train->add_option("--data", data, "Feature dump (default: data.path, else synthesize)");
  train->add_option("--resume", resume, "Checkpoint to continue from")->check(CLI::ExistingFile);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint or a prediction dump");
  add_common(eval, common);
  eval->add_option("--model", model, "Checkpoint file");
  eval->add_option("--data", data, "Feature dump (default: data.path, else synthesize)");
  eval->add_option("--predictions", predictions, "Line-delimited prediction dump")->check(CLI::ExistingFile);
  eval->add_option("--split", split, "train, val or test (default: eval.split)");

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  add_common(grad, common);
  grad->add_option("--inject-sign-flip", flip, "Negate one parameter group's gradient (test hook)");

  auto* ablate = app.add_subcommand("ablate", "Train and compare the ablation grid");
  add_common(ablate, common);
  ablate->add_option("--data", data, "Feature dump (default: data.path, else synthesize)");

  auto* report = app.add_subcommand("report", "Re-render a saved evaluation report");
  add_common(report, common);
  report->add_option("--report", report_path, "report.json written by eval")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalidInput;
  }

  try {
    if (*synth) return cmd_synth(common);
    if (*train) return cmd_train(common, data, resume);
    if (*eval) return cmd_eval(common, model, data, predictions, split);
    if (*grad) return cmd_gradcheck(common, flip);
    if (*ablate) return cmd_ablate(common, data);
    if (*report) return cmd_report(common, report_path);
  } catch (const CliFailure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  }
  return kInvalidInput;
}
