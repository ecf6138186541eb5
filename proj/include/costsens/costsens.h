/* C interface to the costsens library.
 *
 * Every function returns a cs_status. On failure, cs_last_error_message()
 * describes the problem for the calling thread. Handles are opaque and owned
 * by the caller; release them with the matching *_free function. Strings
 * returned through char** are released with cs_string_free. */
#ifndef COSTSENS_COSTSENS_H
#define COSTSENS_COSTSENS_H

#include <stddef.h>
#include <stdint.h>

#if defined(COSTSENS_BUILDING_LIBRARY)
#define COSTSENS_API __attribute__((visibility("default")))
#else
#define COSTSENS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cs_status {
  CS_OK = 0,
  CS_INPUT_NOT_FOUND,
  CS_IO_ERROR,
  CS_SCHEMA_ERROR,
  CS_PARSE_ERROR,
  CS_EMPTY_DATASET,
  CS_NO_POSITIVE_COST,
  CS_SINGULAR_DESIGN,
  CS_EMPTY_FIT,
  CS_ZERO_PROBABILITY,
  CS_MGF_DOMAIN,
  CS_SEPARATION,
  CS_CORRELATION_MODEL,
  CS_CONFIG_ERROR,
  CS_INVALID_ARGUMENT,
  CS_NOT_CONVERGED,
  CS_INTERNAL_ERROR
} cs_status;

typedef enum cs_format { CS_FORMAT_CSV = 0, CS_FORMAT_TABLE = 1 } cs_format;

typedef enum cs_family { CS_BERNOULLI = 0, CS_NORMAL = 1, CS_POISSON = 2, CS_GAMMA = 3 } cs_family;

/* "input-not-found", "mgf-domain", ... ; "ok" for CS_OK. */
COSTSENS_API const char* cs_status_name(cs_status status);
/* Message of the last failure on this thread; "" when none. */
COSTSENS_API const char* cs_last_error_message(void);
COSTSENS_API void cs_string_free(char* text);

/* ---- datasets ---- */

typedef struct cs_dataset cs_dataset;

/* Column names for CSV input; NULL members keep the defaults
 * (cost, time, event, treat; covariates = all remaining columns).
 * covariates and categorical are comma-separated lists. */
typedef struct cs_column_spec {
  const char* cost;
  const char* time;
  const char* event;
  const char* treat;
  const char* covariates;
  const char* categorical;
} cs_column_spec;

COSTSENS_API cs_status cs_dataset_load(const char* path, const cs_column_spec* columns, cs_dataset** out);
COSTSENS_API cs_status cs_dataset_parse(const char* csv_text, const cs_column_spec* columns, cs_dataset** out);
COSTSENS_API cs_status cs_dataset_save(const cs_dataset* dataset, const char* path);
COSTSENS_API cs_status cs_dataset_to_csv(const cs_dataset* dataset, char** out);
/* Adds half the smallest positive cost to every record (new handle). */
COSTSENS_API cs_status cs_dataset_shift_zero(const cs_dataset* dataset, cs_dataset** out);
COSTSENS_API size_t cs_dataset_size(const cs_dataset* dataset);
COSTSENS_API size_t cs_dataset_covariate_count(const cs_dataset* dataset);
COSTSENS_API size_t cs_dataset_count_treated(const cs_dataset* dataset);
COSTSENS_API size_t cs_dataset_count_zero_cost(const cs_dataset* dataset);
COSTSENS_API double cs_dataset_censoring_rate(const cs_dataset* dataset);
COSTSENS_API void cs_dataset_free(cs_dataset* dataset);

/* Synthetic registry-like cohort (1860 records) for end-to-end runs. */
COSTSENS_API cs_status cs_synth_cohort(uint64_t seed, cs_dataset** out);

/* Inverse-probability-of-censoring weights, one per record. */
COSTSENS_API cs_status cs_ipw_weights(const cs_dataset* dataset, int stratified, double* weights, size_t length);

/* ---- cost regression ---- */

typedef struct cs_fit cs_fit;

typedef struct cs_fit_options {
  int ipw;                  /* weight by inverse probability of censoring */
  int stratified_censoring; /* censoring survival per arm */
  int model_variance;       /* report model-based instead of sandwich standard errors */
  double level;             /* confidence level */
} cs_fit_options;

COSTSENS_API cs_fit_options cs_fit_options_default(void);
/* A fit that fails to converge is still returned; check cs_fit_converged. */
COSTSENS_API cs_status cs_fit_cost(const cs_dataset* dataset, const cs_fit_options* options, cs_fit** out);
COSTSENS_API int cs_fit_converged(const cs_fit* fit);
COSTSENS_API size_t cs_fit_coefficient_count(const cs_fit* fit);
COSTSENS_API cs_status cs_fit_coefficient(const cs_fit* fit, size_t index, double* estimate, double* se);
/* Treatment coefficient (log cost ratio) and its standard error. */
COSTSENS_API cs_status cs_fit_treatment(const cs_fit* fit, double* beta, double* se);
COSTSENS_API cs_status cs_fit_render(const cs_fit* fit, cs_format format, char** out);
COSTSENS_API void cs_fit_free(cs_fit* fit);

/* ---- sensitivity ---- */

/* Parameters: bernoulli (prevalence, -), normal (mean, sd), poisson (rate, -),
 * gamma (shape, scale). Effects are on the log scale. */
typedef struct cs_confounder {
  cs_family family;
  double control[2];
  double treated[2];
  double gamma_control;
  double gamma_treated;
} cs_confounder;

typedef struct cs_adjusted {
  double beta;
  double se;
  double ci_low;
  double ci_high;
  double cost_ratio;
  double cr_low;
  double cr_high;
} cs_adjusted;

COSTSENS_API cs_status cs_family_from_name(const char* name, cs_family* out);
COSTSENS_API cs_status cs_log_mgf(cs_family family, double first, double second, double gamma, double* out);
COSTSENS_API cs_status cs_adjust(double beta_star, double se, double level, const cs_confounder* confounder,
                                 cs_adjusted* out);
/* se from a reported cost-ratio interval. */
COSTSENS_API cs_status cs_apparent_from_ci(double cost_ratio, double ci_low, double ci_high, double level,
                                           double* beta_star, double* se);

typedef struct cs_grid cs_grid;
typedef struct cs_sweep cs_sweep;

COSTSENS_API cs_status cs_grid_load(const char* path, cs_grid** out);
COSTSENS_API cs_status cs_grid_parse(const char* text, cs_grid** out);
/* Grid from "key=value" pairs separated by spaces or ';' (comma lists expand),
 * e.g. "pi0=0.7 pi1=0.5 effect=1.1,1.25". normalization may be NULL. */
COSTSENS_API cs_status cs_grid_from_pairs(const char* family, const char* pairs, const char* normalization,
                                          cs_grid** out);
COSTSENS_API size_t cs_grid_size(const cs_grid* grid);
/* 1 when the grid file carries beta_star/se (or a cost-ratio interval). */
COSTSENS_API int cs_grid_apparent(const cs_grid* grid, double* beta_star, double* se, double* level);
COSTSENS_API void cs_grid_free(cs_grid* grid);

/* decision_digits < 0 judges significance at full precision. */
COSTSENS_API cs_status cs_sweep_run(const cs_grid* grid, double beta_star, double se, double level,
                                    int decision_digits, cs_sweep** out);
COSTSENS_API size_t cs_sweep_size(const cs_sweep* sweep);
/* *ok is 0 for a row that failed (e.g. mgf-domain); *changed is the
 * significance-change flag. */
COSTSENS_API cs_status cs_sweep_row(const cs_sweep* sweep, size_t index, cs_adjusted* effect, int* ok, int* changed);
COSTSENS_API cs_status cs_sweep_render(const cs_sweep* sweep, cs_format format, char** out);
COSTSENS_API void cs_sweep_free(cs_sweep* sweep);

/* ---- simulation ---- */

typedef struct cs_scenario_set cs_scenario_set;
typedef struct cs_study cs_study;

COSTSENS_API cs_status cs_scenario_set_load(const char* path, cs_scenario_set** out);
COSTSENS_API cs_status cs_scenario_set_parse(const char* text, cs_scenario_set** out);
COSTSENS_API size_t cs_scenario_set_size(const cs_scenario_set* set);
COSTSENS_API void cs_scenario_set_free(cs_scenario_set* set);

typedef struct cs_study_options {
  uint64_t seed;
  size_t replications;
  unsigned workers;
  int variance; /* 0 auto, 1 sandwich, 2 model-based */
  double level;
  int stratified_censoring;
  int fit_true_model;
} cs_study_options;

typedef struct cs_study_summary {
  size_t replications;
  size_t convergence_failures;
  double mean_beta_unadjusted;
  double coverage_unadjusted;
  double mean_beta_adjusted;
  double coverage_adjusted;
  double mc_standard_error;
  double mean_corr_treated;
  double mean_corr_control;
  double mean_beta_true_model;
} cs_study_summary;

COSTSENS_API cs_study_options cs_study_options_default(void);
COSTSENS_API cs_status cs_study_run(const cs_scenario_set* set, const cs_study_options* options, cs_study** out);
COSTSENS_API size_t cs_study_size(const cs_study* study);
COSTSENS_API cs_status cs_study_summary_at(const cs_study* study, size_t index, cs_study_summary* out);
COSTSENS_API cs_status cs_study_render(const cs_study* study, cs_format format, char** out);
/* Long-format CSV: one line per replication. */
COSTSENS_API cs_status cs_study_render_replications(const cs_study* study, char** out);
COSTSENS_API void cs_study_free(cs_study* study);

typedef struct cs_propensity_options {
  int model; /* 1: corr(U, Z_j) = 0.1 each; 2: 0.3, -0.4, 0; 0: use correlations[] */
  double correlations[3];
  size_t n;
  size_t replications;
  uint64_t seed;
  unsigned workers;
  double gamma;
} cs_propensity_options;

COSTSENS_API cs_propensity_options cs_propensity_options_default(void);
/* Either output may be NULL. */
COSTSENS_API cs_status cs_propensity_study(const cs_propensity_options* options, cs_format format, char** out,
                                           double* bias_adjusted);

/* ---- diagnostics ---- */

typedef struct cs_report cs_report;

typedef struct cs_diag_options {
  int spearman;
  double threshold;
} cs_diag_options;

COSTSENS_API cs_diag_options cs_diag_options_default(void);
COSTSENS_API cs_status cs_propensity_scores(const cs_dataset* dataset, double* scores, size_t length);
COSTSENS_API cs_status cs_diagnose(const cs_dataset* dataset, const cs_diag_options* options, cs_report** out);
COSTSENS_API size_t cs_report_size(const cs_report* report);
COSTSENS_API int cs_report_flagged(const cs_report* report, size_t index);
COSTSENS_API cs_status cs_report_render(const cs_report* report, cs_format format, char** out);
COSTSENS_API void cs_report_free(cs_report* report);

#ifdef __cplusplus
}
#endif

#endif /* COSTSENS_COSTSENS_H */
