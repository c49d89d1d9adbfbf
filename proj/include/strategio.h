#ifndef STRATEGIO_H
#define STRATEGIO_H

#include <stddef.h>

#if defined(STRATEGIO_BUILDING_LIBRARY)
#define SP_API __attribute__((visibility("default")))
#else
#define SP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sp_status {
  SP_OK = 0,
  SP_ERR_INVALID_ARGUMENT = 1,
  SP_ERR_DIMENSION_MISMATCH = 2,
  SP_ERR_RANK_DEFICIENT = 3,
  SP_ERR_INFEASIBLE = 4,
  SP_ERR_NOT_CONVERGED = 5,
  SP_ERR_PARSE = 6,
  SP_ERR_IO = 7,
  SP_ERR_UNSUPPORTED = 8,
  SP_ERR_BOUND_VIOLATION = 9,
  SP_ERR_DEGENERATE = 10,
  SP_ERR_INTERNAL = 99
} sp_status;

typedef struct sp_policy sp_policy;
typedef struct sp_dataset sp_dataset;

SP_API const char* sp_version(void);
SP_API const char* sp_status_string(sp_status status);
/* Message of the last failed call on this thread; "" if none. */
SP_API const char* sp_last_error(void);
/* Frees strings returned through char** out-parameters. */
SP_API void sp_string_free(char* s);

/* Policies. JSON is tagged by "variant"; relative donor paths of the
   synthetic-interventions variant resolve against base_dir (may be NULL). */
SP_API sp_status sp_policy_from_json(const char* json, const char* base_dir, sp_policy** out);
SP_API sp_status sp_policy_to_json(const sp_policy* policy, char** json_out);
SP_API void sp_policy_free(sp_policy* policy);
SP_API sp_status sp_policy_k(const sp_policy* policy, int* k);
SP_API sp_status sp_policy_dim(const sp_policy* policy, int* dim);
SP_API sp_status sp_policy_assign(const sp_policy* policy, const double* y, size_t n, int* intervention);

typedef struct sp_best_response_info {
  int achieved;
  int moved;
  int exact;
  double effort;
} sp_best_response_info;

/* y_out (length n) receives the modified report. */
SP_API sp_status sp_policy_best_response(const sp_policy* policy, const double* y, size_t n, double delta,
                                         double* y_out, sp_best_response_info* info);
/* JSON list of halfspaces of the assignment set of d. */
SP_API sp_status sp_policy_region_json(const sp_policy* policy, int d, char** json_out);

/* Datasets in the long CSV format; k <= 0 infers it from the assignments. */
SP_API sp_status sp_dataset_read_csv(const char* path, int T0, int k, sp_dataset** out);
SP_API sp_status sp_dataset_write_csv(const sp_dataset* data, const char* path);
SP_API sp_status sp_dataset_shape(const sp_dataset* data, int* units, int* T0, int* post_length, int* k);
/* Copies the units x T0 pre-period matrix, row-major, into out. */
SP_API sp_status sp_dataset_pre_period(const sp_dataset* data, double* out, size_t capacity);
SP_API void sp_dataset_free(sp_dataset* data);

/* Experiment-config JSON drives generation: the training panel (RCT) and the
   ground truth of the world as JSON. */
SP_API sp_status sp_generate(const char* config_json, sp_dataset** train_out, char** truth_json_out);

/* Options JSON: {"policy", "delta", "omega", "pcr": {"p", "rho",
   "min_singular_ratio"}}. Diagnostics: learned betas, singular values, snr. */
SP_API sp_status sp_learn(const sp_dataset* data, const char* options_json, sp_policy** policy_out,
                          char** diagnostics_json_out);

/* Metrics JSON; include_records adds per-unit records. */
SP_API sp_status sp_run_experiment(const char* config_json, int include_records, char** metrics_json_out);
/* Scores a fixed policy on the test population of the configured world. */
SP_API sp_status sp_evaluate_policy(const char* config_json, const sp_policy* policy, int include_records,
                                    char** metrics_json_out);

/* jobs <= 0 uses all cores. */
SP_API sp_status sp_delta_sweep(const char* config_json, const double* ratios, size_t n_ratios, int jobs,
                                char** csv_out, char** json_out);

/* Request JSON: {"mode": "finite"|"continuum", "delta", "units": [{"y", "type"}],
   "betas" (continuum), "preference_rank" (optional)}. */
SP_API sp_status sp_check_sot(const char* request_json, char** report_json_out);

SP_API sp_status sp_demo_impossible(double alpha, double zeta, double delta, char** report_json_out);
/* Config JSON keys: delta, gap_factor, sigma, m_train, m_test, seed, rank. */
SP_API sp_status sp_demo_si_failure(const char* config_json, char** report_json_out);
SP_API sp_status sp_demo_gap_necessity(double theta1, double theta2, double c, double alpha_small, double delta,
                                       const int* n_values, size_t count, char** report_json_out);

#ifdef __cplusplus
}
#endif

#endif
