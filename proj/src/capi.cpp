// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

#include "came/came.h"

#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "came/ablate.hpp"
#include "came/checkpoint.hpp"
#include "came/config.hpp"
#include "came/data.hpp"
#include "came/error.hpp"
#include "came/gradcheck.hpp"
#include "came/metrics.hpp"
#include "came/report.hpp"
#include "came/train.hpp"

struct came_config {
  came::RunConfig value;
};
struct came_dataset {
  came::DatasetSplit value;
};
struct came_model {
  came::Checkpoint value;
};
struct came_report {
  came::EvalReport value;
};

namespace {

thread_local std::string g_last_error;

came_status fail(came_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class F>
came_status guarded(F&& f) {
  try {
    return f();
  } catch (const came::InvalidArgument& e) {
    return fail(CAME_ERR_INVALID_ARGUMENT, e.what());
  } catch (const came::ParseError& e) {
    return fail(CAME_ERR_PARSE, e.what());
  } catch (const came::SchemaError& e) {
    return fail(CAME_ERR_SCHEMA, e.what());
  } catch (const came::IoError& e) {
    return fail(CAME_ERR_IO, e.what());
  } catch (const came::TrainingError& e) {
    return fail(CAME_ERR_TRAINING, e.what());
  } catch (const came::EvaluationError& e) {
    return fail(CAME_ERR_CHECK_FAILED, e.what());
  } catch (const std::bad_alloc&) {
    return fail(CAME_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(CAME_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(CAME_ERR_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

#define CAME_REQUIRE(cond, what) \
  if (!(cond)) return fail(CAME_ERR_INVALID_ARGUMENT, what)

std::string read_file(const char* path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw came::IoError(std::string("cannot open '") + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void check_compatible(const came::Checkpoint& ck, const came::DatasetSplit& ds) {
  if (ck.d_x != ds.d_x || ck.d_c != ds.d_c || ck.vocabulary.size() != ds.vocabulary.size())
    throw came::InvalidArgument("model (d_x=" + std::to_string(ck.d_x) + ", d_c=" + std::to_string(ck.d_c) +
                                ", m=" + std::to_string(ck.vocabulary.size()) + ") does not match dataset (d_x=" +
                                std::to_string(ds.d_x) + ", d_c=" + std::to_string(ds.d_c) +
                                ", m=" + std::to_string(ds.vocabulary.size()) + ")");
}

std::string epoch_line(const came::EpochLog& e) {
  nlohmann::ordered_json j;
  j["epoch"] = e.epoch;
  j["step"] = e.step;
  j["lr"] = e.lr;
  j["train_loss"] = e.train_loss;
  j["aux_loss"] = e.aux_loss;
  if (e.val) {
    nlohmann::ordered_json v;
    for (const auto& a : e.val->at) {
      v["R@" + std::to_string(a.k)] = a.recall;
      v["mR@" + std::to_string(a.k)] = a.mean_recall;
    }
    v["mean"] = e.val->mean;
    j["val"] = v;
  } else {
    j["val"] = nullptr;
  }
  return j.dump();
}

}  // namespace

extern "C" {

const char* came_version(void) { return "1.0.0"; }

const char* came_status_name(came_status s) {
  switch (s) {
    case CAME_OK: return "ok";
    case CAME_ERR_INVALID_ARGUMENT: return "invalid argument";
    case CAME_ERR_PARSE: return "parse error";
    case CAME_ERR_SCHEMA: return "schema error";
    case CAME_ERR_IO: return "i/o error";
    case CAME_ERR_TRAINING: return "training failure";
    case CAME_ERR_CHECK_FAILED: return "check failed";
    case CAME_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* came_last_error(void) { return g_last_error.c_str(); }

void came_string_free(char* s) { std::free(s); }

came_status came_config_new(came_config** out) {
  CAME_REQUIRE(out, "null output pointer");
  return guarded([&] {
    *out = new came_config{};
    return CAME_OK;
  });
}

came_status came_config_parse(const char* text, came_config** out) {
  CAME_REQUIRE(text && out, "null argument");
  return guarded([&] {
    *out = new came_config{came::parse_run_config(text)};
    return CAME_OK;
  });
}

came_status came_config_load(const char* path, came_config** out) {
  CAME_REQUIRE(path && out, "null argument");
  return guarded([&] {
    *out = new came_config{came::load_run_config(path)};
    return CAME_OK;
  });
}

came_status came_config_set(came_config* cfg, const char* key, const char* value) {
  CAME_REQUIRE(cfg && key && value, "null argument");
  return guarded([&] {
    cfg->value.set(key, value);
    return CAME_OK;
  });
}

came_status came_config_get(const came_config* cfg, const char* key, char** out_value) {
  CAME_REQUIRE(cfg && key && out_value, "null argument");
  return guarded([&] {
    *out_value = dup_string(cfg->value.get(key));
    return CAME_OK;
  });
}

came_status came_config_validate(const came_config* cfg) {
  CAME_REQUIRE(cfg, "null config");
  return guarded([&] {
    cfg->value.validate();
    return CAME_OK;
  });
}

came_status came_config_to_text(const came_config* cfg, char** out_text) {
  CAME_REQUIRE(cfg && out_text, "null argument");
  return guarded([&] {
    *out_text = dup_string(came::to_text(cfg->value));
    return CAME_OK;
  });
}

void came_config_free(came_config* cfg) { delete cfg; }

came_status came_dataset_synthesize(const came_config* cfg, came_dataset** out) {
  CAME_REQUIRE(cfg && out, "null argument");
  return guarded([&] {
    cfg->value.validate();
    *out = new came_dataset{came::generate_synthetic(cfg->value.synth_params())};
    return CAME_OK;
  });
}

came_status came_dataset_load(const char* path, came_dataset** out) {
  CAME_REQUIRE(path && out, "null argument");
  return guarded([&] {
    *out = new came_dataset{came::load_feature_dump(path)};
    return CAME_OK;
  });
}

came_status came_dataset_save(const came_dataset* ds, const char* path) {
  CAME_REQUIRE(ds && path, "null argument");
  return guarded([&] {
    came::save_feature_dump(ds->value, path);
    return CAME_OK;
  });
}

came_status came_dataset_get_info(const came_dataset* ds, came_dataset_info* out) {
  CAME_REQUIRE(ds && out, "null argument");
  const auto& d = ds->value;
  *out = {d.vocabulary.size(), d.d_x, d.d_c, d.train.size(), d.val.size(), d.test.size(), d.warnings.size()};
  return CAME_OK;
}

came_status came_dataset_class_counts(const came_dataset* ds, uint64_t* counts, size_t capacity) {
  CAME_REQUIRE(ds && (counts || capacity == 0), "null argument");
  const auto& c = ds->value.vocabulary.train_counts;
  for (size_t i = 0; i < capacity && i < c.size(); ++i) counts[i] = c[i];
  return CAME_OK;
}

came_status came_dataset_class_name(const came_dataset* ds, size_t cls, char** out_name) {
  CAME_REQUIRE(ds && out_name, "null argument");
  CAME_REQUIRE(cls < ds->value.vocabulary.size(), "class index out of range");
  return guarded([&] {
    *out_name = dup_string(ds->value.vocabulary.names[cls]);
    return CAME_OK;
  });
}

came_status came_dataset_warning(const came_dataset* ds, size_t index, char** out_text) {
  CAME_REQUIRE(ds && out_text, "null argument");
  CAME_REQUIRE(index < ds->value.warnings.size(), "warning index out of range");
  return guarded([&] {
    *out_text = dup_string(ds->value.warnings[index]);
    return CAME_OK;
  });
}

void came_dataset_free(came_dataset* ds) { delete ds; }

came_status came_model_init(const came_config* cfg, const came_dataset* ds, came_model** out) {
  CAME_REQUIRE(cfg && ds && out, "null argument");
  return guarded([&] {
    const auto& rc = cfg->value;
    rc.validate();
    const auto& d = ds->value;
    came::Checkpoint ck;
    ck.config = rc.model;
    ck.vocabulary = d.vocabulary;
    ck.d_x = d.d_x;
    ck.d_c = d.d_c;
    ck.params = came::initial_params(d, rc.model, rc.train_config());
    came::TrainState st;
    st.optimizer.velocity = came::CameParams::zeros(rc.model, d.d_x, d.d_c, d.vocabulary.size());
    ck.train_state = std::move(st);
    *out = new came_model{std::move(ck)};
    return CAME_OK;
  });
}

came_status came_model_load(const char* path, came_model** out) {
  CAME_REQUIRE(path && out, "null argument");
  return guarded([&] {
    *out = new came_model{came::load_checkpoint(path)};
    return CAME_OK;
  });
}

came_status came_model_save(const came_model* model, const char* path) {
  CAME_REQUIRE(model && path, "null argument");
  return guarded([&] {
    came::save_checkpoint(model->value, path);
    return CAME_OK;
  });
}

came_status came_model_get_info(const came_model* model, came_model_info* out) {
  CAME_REQUIRE(model && out, "null argument");
  const auto& ck = model->value;
  *out = {ck.config.num_experts,
          ck.vocabulary.size(),
          ck.d_x,
          ck.d_c,
          ck.params.parameter_count(),
          ck.train_state ? ck.train_state->epochs_completed : 0,
          ck.train_state ? ck.train_state->optimizer.step : 0};
  return CAME_OK;
}

came_status came_model_train(came_model* model, const came_config* cfg, const came_dataset* ds, came_log_fn on_epoch,
                             void* user, int64_t* out_failed_step) {
  CAME_REQUIRE(model && cfg && ds, "null argument");
  return guarded([&] {
    const auto& rc = cfg->value;
    rc.validate();
    auto& ck = model->value;
    check_compatible(ck, ds->value);
    if (!(ck.config == rc.model))
      throw came::InvalidArgument("model section of the config differs from the checkpoint's model");
    came::TrainState st;
    if (ck.train_state) {
      st = *ck.train_state;
    } else {
      st.optimizer.velocity = came::CameParams::zeros(ck.config, ck.d_x, ck.d_c, ck.vocabulary.size());
    }
    came::FitOptions fo;
    fo.eval_ks = rc.eval.ks;
    fo.graph_constraint = rc.eval.graph_constraint;
    if (on_epoch) fo.on_epoch = [&](const came::EpochLog& e) { on_epoch(epoch_line(e).c_str(), user); };
    try {
      auto fr = came::resume_fit(ds->value, ck.config, rc.loss, rc.train_config(), ck.params, std::move(st), fo);
      ck.params = std::move(fr.params);
      ck.train_state = std::move(fr.state);
    } catch (const came::TrainingError& e) {
      if (out_failed_step) *out_failed_step = e.step();
      throw;
    }
    return CAME_OK;
  });
}

came_status came_model_predict(const came_model* model, const double* x, size_t d_x, const double* c, size_t d_c,
                               double* out_logits, size_t m) {
  CAME_REQUIRE(model && x && c && out_logits, "null argument");
  return guarded([&] {
    const auto& ck = model->value;
    if (m != ck.vocabulary.size()) throw came::InvalidArgument("output buffer length differs from class count");
    const auto t = came::forward(ck.params, ck.config, {x, d_x}, {c, d_c});
    const auto& logits = came::inference_logits(t, ck.config);
    std::copy(logits.begin(), logits.end(), out_logits);
    return CAME_OK;
  });
}

void came_model_free(came_model* model) { delete model; }

came_status came_evaluate(const came_model* model, const came_dataset* ds, const came_config* cfg, came_report** out) {
  CAME_REQUIRE(model && ds && cfg && out, "null argument");
  return guarded([&] {
    const auto& rc = cfg->value;
    rc.validate();
    const auto& ck = model->value;
    check_compatible(ck, ds->value);
    const auto& part = ds->value.part(rc.eval.split);
    if (part.empty())
      throw came::InvalidArgument(std::string("dataset split '") + came::to_string(rc.eval.split) + "' is empty");
    *out = new came_report{came::evaluate(ck.params, ck.config, part, rc.eval.ks, ds->value.vocabulary,
                                          rc.eval.graph_constraint)};
    return CAME_OK;
  });
}

came_status came_evaluate_predictions(const char* predictions_path, const came_dataset* vocabulary,
                                      const came_config* cfg, came_report** out) {
  CAME_REQUIRE(predictions_path && cfg && out, "null argument");
  return guarded([&] {
    const auto& rc = cfg->value;
    rc.validate();
    const auto preds = came::parse_prediction_dump(read_file(predictions_path));
    const std::size_t m = came::validate_predictions(preds);
    if (m == 0) throw came::SchemaError("prediction dump holds no scored pairs");
    came::PredicateVocabulary vocab;
    if (vocabulary) {
      vocab = vocabulary->value.vocabulary;
    } else {
      vocab = came::PredicateVocabulary::with_default_names(m);
      for (const auto& img : preds)
        for (const auto& g : img.gt) ++vocab.train_counts[g.predicate];
    }
    *out = new came_report{came::evaluate_predictions(preds, rc.eval.ks, rc.eval.graph_constraint, vocab)};
    return CAME_OK;
  });
}

came_status came_report_load(const char* path, came_report** out) {
  CAME_REQUIRE(path && out, "null argument");
  return guarded([&] {
    *out = new came_report{came::parse_eval_report(read_file(path))};
    return CAME_OK;
  });
}

came_status came_report_to_json(const came_report* r, char** out_text) {
  CAME_REQUIRE(r && out_text, "null argument");
  return guarded([&] {
    *out_text = dup_string(came::serialize_eval_report(r->value));
    return CAME_OK;
  });
}

came_status came_report_to_csv(const came_report* r, char** out_text) {
  CAME_REQUIRE(r && out_text, "null argument");
  return guarded([&] {
    *out_text = dup_string(came::per_class_recall_csv(r->value));
    return CAME_OK;
  });
}

came_status came_report_to_svg(const came_report* r, char** out_text) {
  CAME_REQUIRE(r && out_text, "null argument");
  return guarded([&] {
    *out_text = dup_string(came::per_class_recall_svg(r->value));
    return CAME_OK;
  });
}

came_status came_report_to_markdown(const came_report* r, char** out_text) {
  CAME_REQUIRE(r && out_text, "null argument");
  return guarded([&] {
    *out_text = dup_string(came::summary_markdown(r->value));
    return CAME_OK;
  });
}

came_status came_report_recall(const came_report* r, size_t k, double* out_recall, double* out_mean_recall) {
  CAME_REQUIRE(r, "null report");
  return guarded([&] {
    const auto& a = r->value.metrics_at(k);
    if (out_recall) *out_recall = a.recall;
    if (out_mean_recall) *out_mean_recall = a.mean_recall;
    return CAME_OK;
  });
}

came_status came_report_mean(const came_report* r, double* out_mean) {
  CAME_REQUIRE(r && out_mean, "null argument");
  *out_mean = r->value.mean;
  return CAME_OK;
}

void came_report_free(came_report* r) { delete r; }

came_status came_gradcheck(const came_config* cfg, char** out_text) {
  CAME_REQUIRE(cfg && out_text, "null argument");
  return guarded([&] {
    const auto& rc = cfg->value;
    rc.validate();
    const auto res = came::run_gradcheck(rc.gradcheck, rc.model, rc.seed);
    std::string text = res.to_text();
    if (!res.passed) {
      text += "failing groups:";
      for (const auto& f : res.failing()) text += " " + f;
      text += "\n";
    }
    *out_text = dup_string(text);
    if (!res.passed) return fail(CAME_ERR_CHECK_FAILED, "gradient check failed");
    return CAME_OK;
  });
}

came_status came_ablate(const came_config* cfg, const came_dataset* ds, char** out_markdown, char** out_json) {
  CAME_REQUIRE(cfg && ds && out_markdown, "null argument");
  return guarded([&] {
    const auto& rc = cfg->value;
    rc.validate();
    const auto rows = came::run_ablation(ds->value, rc);
    *out_markdown = dup_string(came::ablation_markdown(rows, rc.eval.ks));
    if (out_json) {
      nlohmann::ordered_json arr = nlohmann::ordered_json::array();
      for (const auto& r : rows) {
        nlohmann::ordered_json j;
        j["grid"] = r.cell.grid;
        j["label"] = r.cell.label;
        j["num_experts"] = r.cell.model.num_experts;
        j["ew_enabled"] = r.cell.model.ew_enabled;
        j["pw_enabled"] = r.cell.model.pw_enabled;
        j["pw_temperature"] = r.cell.model.pw_temperature;
        j["loss"] = came::to_string(r.cell.loss.base);
        j["seed"] = r.seed;
        if (r.report) {
          j["report"] = nlohmann::ordered_json::parse(came::serialize_eval_report(*r.report));
        } else {
          j["error"] = r.error;
        }
        arr.push_back(std::move(j));
      }
      *out_json = dup_string(arr.dump(2) + "\n");
    }
    return CAME_OK;
  });
}

}  // extern "C"
