/* SPDX-License-Identifier: Apache-2.0 */
#ifndef RSHMM_H
#define RSHMM_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define RSHMM_API __declspec(dllexport)
#else
#define RSHMM_API __attribute__((visibility("default")))
#endif

/* Status codes. 0 is success; the others mirror the library's error kinds. */
enum {
  RSHMM_OK = 0,
  RSHMM_E_IO = 1,
  RSHMM_E_PARSE,
  RSHMM_E_MISSING_CELL,
  RSHMM_E_DUPLICATE_CELL,
  RSHMM_E_CATEGORY_OUT_OF_RANGE,
  RSHMM_E_RAGGED_COVARIATES,
  RSHMM_E_NON_INTEGER_CATEGORY,
  RSHMM_E_DIMENSION_MISMATCH,
  RSHMM_E_INVALID_STATE,
  RSHMM_E_INVALID_ARGUMENT,
  RSHMM_E_NON_FINITE_WEIGHTS,
  RSHMM_E_NUMERICAL_FAILURE,
  RSHMM_E_ALL_STARTS_FAILED,
  RSHMM_E_UNSUPPORTED,
  RSHMM_E_INTERNAL = 99
};
typedef int rshmm_status;

typedef struct rshmm_dataset rshmm_dataset;
typedef struct rshmm_model rshmm_model;
typedef struct rshmm_fit rshmm_fit;

/* Message of the last failed call on this thread ("" after success). */
RSHMM_API const char* rshmm_last_error(void);
RSHMM_API const char* rshmm_version(void);
/* Caps worker threads; 0 restores the default. */
RSHMM_API void rshmm_set_threads(int n);
/* Strings returned through char** out-parameters are released here. */
RSHMM_API void rshmm_string_free(char* s);

/* ---- panel data ---- */
RSHMM_API rshmm_status rshmm_dataset_load(const char* csv_path, const char* schema_path,
                                          rshmm_dataset** out);
RSHMM_API rshmm_status rshmm_dataset_parse(const char* csv_text, const char* schema_json,
                                           rshmm_dataset** out);
RSHMM_API rshmm_status rshmm_dataset_write(const rshmm_dataset* data, const char* csv_path,
                                           const char* schema_path);
RSHMM_API void rshmm_dataset_free(rshmm_dataset* data);
RSHMM_API int rshmm_dataset_units(const rshmm_dataset* data);
RSHMM_API int rshmm_dataset_occasions(const rshmm_dataset* data);
RSHMM_API int rshmm_dataset_responses(const rshmm_dataset* data);
/* {"categories": [...], "p1_L": ..., "p1_U": ..., "p2_L": ..., "p2_U": ...} */
RSHMM_API rshmm_status rshmm_dataset_dims_json(const rshmm_dataset* data, char** out);
/* 64-bit FNV-1a hash of the CSV form. */
RSHMM_API uint64_t rshmm_dataset_hash(const rshmm_dataset* data);

/* ---- model specifications and parameters ---- */
/* spec_json: {"variant": "M8", "k": 3} or explicit forms; dims_json as above. */
RSHMM_API rshmm_status rshmm_count_params(const char* spec_json, const char* dims_json, int* out);
RSHMM_API rshmm_status rshmm_model_from_json(const char* json, rshmm_model** out);
RSHMM_API rshmm_status rshmm_model_to_json(const rshmm_model* model, char** out);
/* Reference SHIW-shaped parameters (M8, k = 3, c = (6, 3), seven covariates). */
RSHMM_API rshmm_status rshmm_model_reference(rshmm_model** out);
RSHMM_API void rshmm_model_free(rshmm_model* model);
RSHMM_API int rshmm_model_param_count(const rshmm_model* model);
/* block,parameter,estimate rows; labels use data's covariate names (data may be NULL). */
RSHMM_API rshmm_status rshmm_model_table_csv(const rshmm_model* model, const rshmm_dataset* data,
                                             char** out);
/* Long CSV of every conditional response pmf. */
RSHMM_API rshmm_status rshmm_model_pmf_csv(const rshmm_model* model, char** out);

/* ---- simulation ---- */
/* covariates may be NULL: binary columns are drawn with the prevalences
   (NULL or n_prev == 0 selects the reference prevalences). paths_csv may be
   NULL. */
RSHMM_API rshmm_status rshmm_simulate(const rshmm_model* model, int n, int T, uint64_t seed,
                                      const rshmm_dataset* covariates, const double* prevalences,
                                      int n_prev, rshmm_dataset** out, char** paths_csv);
RSHMM_API rshmm_status rshmm_bootstrap_panel(const rshmm_dataset* data, const rshmm_model* model,
                                             uint64_t seed, rshmm_dataset** out);

/* ---- estimation ---- */
typedef struct {
  double tol_loglik;
  double tol_param;
  double tol_score;
  int max_iter;
  int n_starts;
  uint64_t seed;
  double start_dispersion;
  int polish;      /* nonzero: Newton polish of the best start */
  int data_start;  /* nonzero: first start from response quantiles */
} rshmm_fit_options;

RSHMM_API void rshmm_fit_options_default(rshmm_fit_options* opts);
/* warm may be NULL; a warm start is tried before the other starts. */
RSHMM_API rshmm_status rshmm_estimate(const rshmm_dataset* data, const char* spec_json,
                                      const rshmm_fit_options* opts, const rshmm_model* warm,
                                      rshmm_fit** out);
RSHMM_API rshmm_status rshmm_fit_from_json(const char* json, rshmm_fit** out);
RSHMM_API void rshmm_fit_free(rshmm_fit* fit);
RSHMM_API double rshmm_fit_loglik(const rshmm_fit* fit);
RSHMM_API int rshmm_fit_n_par(const rshmm_fit* fit);
RSHMM_API int rshmm_fit_converged(const rshmm_fit* fit);
RSHMM_API rshmm_status rshmm_fit_model(const rshmm_fit* fit, rshmm_model** out);
/* Covariate names for labels are taken from data (may be NULL). */
RSHMM_API rshmm_status rshmm_fit_to_json(const rshmm_fit* fit, const rshmm_dataset* data,
                                         char** out);
RSHMM_API rshmm_status rshmm_fit_trace_csv(const rshmm_fit* fit, char** out);
RSHMM_API rshmm_status rshmm_null_loglik(const rshmm_dataset* data, double* out);

/* ---- model selection ---- */
/* variants: comma-separated names ("M6,M7,M8"). best_row may be NULL. */
RSHMM_API rshmm_status rshmm_select(const rshmm_dataset* data, const char* variants,
                                    const int* ks, int n_k, const rshmm_fit_options* opts,
                                    char** csv, char** json, int* best_row);

/* ---- standard errors ---- */
/* methods: comma-separated subset of "oim,opim,sdw,boot". */
RSHMM_API rshmm_status rshmm_standard_errors(const rshmm_dataset* data, const rshmm_model* model,
                                             const char* methods, int boot_reps,
                                             uint64_t seed, char** csv, char** json);

/* ---- diagnostics ---- */
RSHMM_API rshmm_status rshmm_indices(const rshmm_dataset* data, const rshmm_fit* fit, char** json);
/* subset: NULL for all responses, else comma-separated 1-based responses. */
RSHMM_API rshmm_status rshmm_residuals(const rshmm_dataset* data, const rshmm_model* model,
                                       const char* subset, char** residuals_csv,
                                       char** chi2_csv, double* share_within_2);

#ifdef __cplusplus
}
#endif

#endif /* RSHMM_H */
