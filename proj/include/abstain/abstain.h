/*
 * Copyright 2026 The Abstain Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface of libabstain.
 *
 * Every fallible call returns an abstain_status. On failure a description
 * is available from abstain_last_error() on the calling thread until the
 * next failing call there. Strings returned through char** are owned by
 * the caller and released with abstain_string_free(). Handles are released
 * with their matching *_free function; passing NULL to a free is a no-op.
 */

#ifndef ABSTAIN_ABSTAIN_H_
#define ABSTAIN_ABSTAIN_H_

#include <stddef.h>

#if defined(_WIN32)
#if defined(ABSTAIN_BUILDING_LIBRARY)
#define ABSTAIN_API __declspec(dllexport)
#else
#define ABSTAIN_API __declspec(dllimport)
#endif
#else
#define ABSTAIN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum abstain_status {
  ABSTAIN_OK = 0,
  ABSTAIN_E_ARGUMENT = 1,
  ABSTAIN_E_PARSE = 2,
  ABSTAIN_E_VALIDATION = 3,
  ABSTAIN_E_IO = 4,
  ABSTAIN_E_TRANSPORT = 5,
  ABSTAIN_E_HTTP = 6,
  ABSTAIN_E_CAPABILITY = 7,
  ABSTAIN_E_COMPLETENESS = 8,
  ABSTAIN_E_LOOKUP = 9,
  ABSTAIN_E_DEGENERATE_FIT = 10,
  ABSTAIN_E_RUN_FAILED = 11,
  ABSTAIN_E_INTERNAL = 99
} abstain_status;

typedef struct abstain_config abstain_config;
typedef struct abstain_records abstain_records;
typedef struct abstain_surface abstain_surface;

ABSTAIN_API const char* abstain_version(void);
ABSTAIN_API const char* abstain_status_name(abstain_status status);
ABSTAIN_API const char* abstain_last_error(void);
/* For ABSTAIN_E_RUN_FAILED: the error kind most question failures shared. */
ABSTAIN_API abstain_status abstain_last_run_cause(void);
ABSTAIN_API void abstain_string_free(char* s);

/* ---- configuration and runs ------------------------------------------ */

/* Options object with keys as in the CLI (underscores for dashes). */
ABSTAIN_API abstain_status abstain_config_from_json(const char* json, abstain_config** out);
ABSTAIN_API void abstain_config_free(abstain_config* config);
ABSTAIN_API abstain_status abstain_config_hash(const abstain_config* config, char** out_hex);
/* Resolved configuration as JSON, including the non-hashed fields. */
ABSTAIN_API abstain_status abstain_config_to_json(const abstain_config* config, char** out_json);

/* Runs the configured sweep. `created_at` pins the record timestamp when
 * non-NULL. On success *out_summary receives a single-line JSON object. */
ABSTAIN_API abstain_status abstain_run(const abstain_config* config, const char* created_at,
                                       char** out_summary);

/* ---- records ----------------------------------------------------------- */

ABSTAIN_API abstain_status abstain_records_load(const char* path, abstain_records** out);
ABSTAIN_API void abstain_records_free(abstain_records* records);
ABSTAIN_API size_t abstain_records_count(const abstain_records* records);
ABSTAIN_API abstain_status abstain_records_digest(const abstain_records* records, char** out_hex);
/* Hash from the records file's metadata sidecar, or "unrecorded". */
ABSTAIN_API abstain_status abstain_records_config_hash(const char* records_path, char** out_hex);

/* ---- surfaces ---------------------------------------------------------- */

typedef struct abstain_cell {
  int budget;
  double threshold;
  const char* scenario; /* valid while the surface lives */
  double incorrect_reward;
  size_t n_total;
  size_t n_answered;
  size_t n_correct;
  double coverage;
  double answered_accuracy;
  double mean_utility;
} abstain_cell;

/* `budgets` takes "A:B:S" or a comma list, NULL or "" for the budgets
 * present in the records. `thresholds` and `scenarios` are comma lists,
 * NULL for the defaults {0, 0.5, 0.95} and exam,jeopardy,high_stakes. */
ABSTAIN_API abstain_status abstain_surface_build(const abstain_records* records,
                                                 const char* budgets, const char* thresholds,
                                                 const char* scenarios, const char* config_hash,
                                                 const char* generated_at, abstain_surface** out);
ABSTAIN_API abstain_status abstain_surface_load(const char* surface_json_path,
                                                abstain_surface** out);
ABSTAIN_API void abstain_surface_free(abstain_surface* surface);
/* Writes surface.csv and surface.json under out_dir. */
ABSTAIN_API abstain_status abstain_surface_write(const abstain_surface* surface,
                                                 const char* out_dir);
ABSTAIN_API abstain_status abstain_surface_to_csv(const abstain_surface* surface, char** out);
ABSTAIN_API abstain_status abstain_surface_to_json(const abstain_surface* surface, char** out);
ABSTAIN_API size_t abstain_surface_cell_count(const abstain_surface* surface);
ABSTAIN_API abstain_status abstain_surface_cell(const abstain_surface* surface, size_t index,
                                                abstain_cell* out);
/* Slices fill up to `capacity` cells and report the slice length in *count. */
ABSTAIN_API abstain_status abstain_surface_slice_threshold(const abstain_surface* surface,
                                                           double threshold, const char* scenario,
                                                           abstain_cell* out, size_t capacity,
                                                           size_t* count);
ABSTAIN_API abstain_status abstain_surface_slice_budget(const abstain_surface* surface,
                                                        int budget, const char* scenario,
                                                        abstain_cell* out, size_t capacity,
                                                        size_t* count);

/* ---- analysis ---------------------------------------------------------- */

typedef struct abstain_optimum {
  double threshold;
  double utility;
  double coverage;
} abstain_optimum;

/* Over the records at `budget`. */
ABSTAIN_API abstain_status abstain_optimal_threshold(const abstain_records* records, int budget,
                                                     double incorrect_reward,
                                                     abstain_optimum* out);

typedef struct abstain_cubic {
  double coefficients[4]; /* in x = (budget - budget_min) / (budget_max - budget_min) */
  double budget_min;
  double budget_max;
  double residual_norm;
} abstain_cubic;

ABSTAIN_API abstain_status abstain_fit_cubic(const double* budgets, const double* values,
                                             size_t n, abstain_cubic* out);
/* Per-class cubic trends as JSON; axis is "probability" or "logprob". */
ABSTAIN_API abstain_status abstain_fit_trends(const abstain_records* records, const char* axis,
                                              const char* config_hash, char** out_json);

/* Options: {"scenario", "metric", "axis"}; kind is threshold_slices,
 * utility_surface or confidence_scatter. *out_path receives the file. */
ABSTAIN_API abstain_status abstain_plot(const char* kind, const char* input,
                                        const char* options_json, const char* out_dir,
                                        char** out_path);

/* *out is NULL when `raw` holds no well-formed answer. */
ABSTAIN_API abstain_status abstain_normalize_answer(const char* raw, const char* format,
                                                    char** out);

#ifdef __cplusplus
}
#endif

#endif /* ABSTAIN_ABSTAIN_H_ */
