// Copyright (c) 2026, The CAME Authors
// SPDX-License-Identifier: Apache-2.0

/*
 * C interface to the context-aware mixture-of-experts library.
 *
 * Every object is an opaque handle created by a new, load or init style
 * call and released with the matching free function. Every fallible call returns a
 * came_status; on failure came_last_error() describes the problem (the text
 * is thread-local and valid until the next failing call on that thread).
 * Strings returned through char** out-parameters are heap allocated and must
 * be released with came_string_free().
 */
#ifndef CAME_CAME_H
#define CAME_CAME_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(CAME_BUILDING_LIBRARY)
#    define CAME_API __declspec(dllexport)
#  else
#    define CAME_API __declspec(dllimport)
#  endif
#else
#  define CAME_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum came_status {
  CAME_OK = 0,
  CAME_ERR_INVALID_ARGUMENT = 1,
  CAME_ERR_PARSE = 2,
  CAME_ERR_SCHEMA = 3,
  CAME_ERR_IO = 4,
  CAME_ERR_TRAINING = 5,
  CAME_ERR_CHECK_FAILED = 6,
  CAME_ERR_INTERNAL = 7
} came_status;

typedef struct came_config came_config;
typedef struct came_dataset came_dataset;
typedef struct came_model came_model;
typedef struct came_report came_report;

typedef struct came_dataset_info {
  size_t num_classes;
  size_t d_x;
  size_t d_c;
  size_t num_train;
  size_t num_val;
  size_t num_test;
  size_t num_warnings;
} came_dataset_info;

typedef struct came_model_info {
  size_t num_experts;
  size_t num_classes;
  size_t d_x;
  size_t d_c;
  size_t parameter_count;
  uint64_t epochs_completed;
  uint64_t optimizer_step;
} came_model_info;

/* Called once per finished epoch with the JSON log line (no newline). */
typedef void (*came_log_fn)(const char* line, void* user);

CAME_API const char* came_version(void);
CAME_API const char* came_status_name(came_status status);
CAME_API const char* came_last_error(void);
CAME_API void came_string_free(char* s);

/* Run configuration (sectioned key = value text; keys are "section.key"). */
CAME_API came_status came_config_new(came_config** out);
CAME_API came_status came_config_parse(const char* text, came_config** out);
CAME_API came_status came_config_load(const char* path, came_config** out);
CAME_API came_status came_config_set(came_config* cfg, const char* key, const char* value);
CAME_API came_status came_config_get(const came_config* cfg, const char* key, char** out_value);
CAME_API came_status came_config_validate(const came_config* cfg);
CAME_API came_status came_config_to_text(const came_config* cfg, char** out_text);
CAME_API void came_config_free(came_config* cfg);

/* Datasets: synthetic generation and the line-delimited feature dump. */
CAME_API came_status came_dataset_synthesize(const came_config* cfg, came_dataset** out);
CAME_API came_status came_dataset_load(const char* path, came_dataset** out);
CAME_API came_status came_dataset_save(const came_dataset* ds, const char* path);
CAME_API came_status came_dataset_get_info(const came_dataset* ds, came_dataset_info* out);
/* Copies min(capacity, m) training counts. */
CAME_API came_status came_dataset_class_counts(const came_dataset* ds, uint64_t* counts, size_t capacity);
CAME_API came_status came_dataset_class_name(const came_dataset* ds, size_t cls, char** out_name);
CAME_API came_status came_dataset_warning(const came_dataset* ds, size_t index, char** out_text);
CAME_API void came_dataset_free(came_dataset* ds);

/* Models and the binary checkpoint format. */
CAME_API came_status came_model_init(const came_config* cfg, const came_dataset* ds, came_model** out);
CAME_API came_status came_model_load(const char* path, came_model** out);
CAME_API came_status came_model_save(const came_model* model, const char* path);
CAME_API came_status came_model_get_info(const came_model* model, came_model_info* out);
/* Trains until the configured epoch count, continuing from the model's saved
 * optimizer state. On CAME_ERR_TRAINING *out_failed_step (if non-null) holds
 * the optimizer step at which training aborted. */
CAME_API came_status came_model_train(came_model* model, const came_config* cfg, const came_dataset* ds,
                                      came_log_fn on_epoch, void* user, int64_t* out_failed_step);
/* Writes the ranking logits (m values) for one relation instance. */
CAME_API came_status came_model_predict(const came_model* model, const double* x, size_t d_x, const double* c,
                                        size_t d_c, double* out_logits, size_t m);
CAME_API void came_model_free(came_model* model);

/* Evaluation reports. */
CAME_API came_status came_evaluate(const came_model* model, const came_dataset* ds, const came_config* cfg,
                                   came_report** out);
/* `vocabulary` may be NULL, in which case class counts come from the dump's
 * ground-truth labels. */
CAME_API came_status came_evaluate_predictions(const char* predictions_path, const came_dataset* vocabulary,
                                               const came_config* cfg, came_report** out);
CAME_API came_status came_report_load(const char* path, came_report** out);
CAME_API came_status came_report_to_json(const came_report* report, char** out_text);
CAME_API came_status came_report_to_csv(const came_report* report, char** out_text);
CAME_API came_status came_report_to_svg(const came_report* report, char** out_text);
CAME_API came_status came_report_to_markdown(const came_report* report, char** out_text);
CAME_API came_status came_report_recall(const came_report* report, size_t k, double* out_recall,
                                        double* out_mean_recall);
CAME_API came_status came_report_mean(const came_report* report, double* out_mean);
CAME_API void came_report_free(came_report* report);

/* Finite-difference gradient suite. Returns CAME_ERR_CHECK_FAILED (with the
 * text report still written) when any check exceeds the tolerance. */
CAME_API came_status came_gradcheck(const came_config* cfg, char** out_text);

/* Ablation sweep over the configured grids. Writes Markdown tables and a
 * JSON array with one report per cell. */
CAME_API came_status came_ablate(const came_config* cfg, const came_dataset* ds, char** out_markdown,
                                 char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* CAME_CAME_H */
