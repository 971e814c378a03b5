/*
 * C interface to the susbench reliability library.
 *
 * Objects are opaque handles created by sb_*_create / sb_*_run and released
 * with the matching sb_*_destroy. Every fallible call returns an sb_status;
 * on failure a description is available from sb_last_error_message() on the
 * same thread until the next failing call.
 */
#ifndef SUSBENCH_H
#define SUSBENCH_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SUSBENCH_BUILDING)
#    define SB_API __declspec(dllexport)
#  else
#    define SB_API __declspec(dllimport)
#  endif
#else
#  define SB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sb_status {
  SB_OK = 0,
  SB_INVALID_ARGUMENT = 1,
  SB_DOMAIN_ERROR = 2,
  SB_CONFIG_ERROR = 3,
  SB_UNKNOWN_LSF = 4,
  SB_DEGENERATE = 5,
  SB_INSUFFICIENT_DATA = 6,
  SB_RUNTIME_ERROR = 7,
  SB_NOT_AVAILABLE = 8
} sb_status;

SB_API const char* sb_status_name(sb_status status);
SB_API const char* sb_last_error_message(void);

/* ---- special functions ------------------------------------------------ */

SB_API double sb_phi_cdf(double x);
SB_API sb_status sb_phi_inv(double p, double* out);
SB_API sb_status sb_bessel_k0(double z, double* out);
SB_API sb_status sb_mills_tail_equiv(double beta, double* out);
/* K0(beta^2/2)/pi; exceeds the product-LSF probability, see sb_lsf_reference. */
SB_API sb_status sb_product_k0_formula(double beta, double* out);

/* ---- limit-state catalog ---------------------------------------------- */

typedef struct sb_lsf sb_lsf;

SB_API size_t sb_catalog_count(void);
SB_API const char* sb_catalog_name(size_t index);

/* keys/values may be NULL when n_params == 0. */
SB_API sb_status sb_lsf_create(const char* name, const char* const* keys, const double* values,
                               size_t n_params, sb_lsf** out);
SB_API void sb_lsf_destroy(sb_lsf* lsf);
SB_API const char* sb_lsf_name(const sb_lsf* lsf);
SB_API size_t sb_lsf_dim(const sb_lsf* lsf);
SB_API sb_status sb_lsf_param(const sb_lsf* lsf, const char* key, double* out);
SB_API sb_status sb_lsf_evaluate(const sb_lsf* lsf, const double* u, double* out);
SB_API uint64_t sb_lsf_evaluations(const sb_lsf* lsf);
/* SB_NOT_AVAILABLE when no closed-form or quadrature reference exists. */
SB_API sb_status sb_lsf_reference(const sb_lsf* lsf, double* probability);
SB_API double sb_tail_to_x(double u2);

/* ---- subset simulation ------------------------------------------------ */

typedef struct sb_sus_config {
  size_t n_samples;
  double p0;
  size_t chain_len;
  double proposal_spread;
  size_t max_levels;
  uint64_t seed;
} sb_sus_config;

typedef enum sb_termination {
  SB_REACHED_ZERO = 0,
  SB_MAX_LEVELS = 1,
  SB_STALLED = 2
} sb_termination;

typedef struct sb_sus_level_info {
  size_t index;
  double threshold;
  double conditional_estimate;
  double chain_acceptance_rate;
  size_t n_samples;
} sb_sus_level_info;

typedef struct sb_sus_result sb_sus_result;

/* 500 samples, p0 = 0.1, chains of 10, unit spread, 20 levels, seed 0. */
SB_API void sb_sus_config_default(sb_sus_config* cfg);
SB_API sb_status sb_sus_run(const sb_lsf* lsf, const sb_sus_config* cfg, sb_sus_result** out);
SB_API void sb_sus_result_destroy(sb_sus_result* result);
SB_API double sb_sus_p_hat(const sb_sus_result* result);
SB_API uint64_t sb_sus_total_evals(const sb_sus_result* result);
SB_API sb_termination sb_sus_termination(const sb_sus_result* result);
SB_API size_t sb_sus_level_count(const sb_sus_result* result);
/* level is 1-based. */
SB_API sb_status sb_sus_level(const sb_sus_result* result, size_t level, sb_sus_level_info* out);
/* Population 0 is the initial Monte Carlo sample, population i >= 1 the
 * samples of level i. coords receives size*dim values, values size values;
 * either may be NULL. */
SB_API size_t sb_sus_population_size(const sb_sus_result* result, size_t population);
SB_API sb_status sb_sus_population(const sb_sus_result* result, size_t population, double* coords,
                                   double* values);
SB_API sb_status sb_select_threshold(const double* values, size_t n, double p0, double* out);

/* ---- crude Monte Carlo ------------------------------------------------ */

typedef struct sb_mc_result {
  double p_hat;
  uint64_t n;
  uint64_t failures;
  double cov_hat; /* meaningful only when cov_defined */
  int cov_defined;
} sb_mc_result;

/* failure_coords (keep*dim values) may be NULL when keep == 0. */
SB_API sb_status sb_mc_run(const sb_lsf* lsf, uint64_t n, uint64_t seed, size_t keep,
                           double* failure_coords, size_t* n_kept, sb_mc_result* out);

/* ---- FORM / SORM ------------------------------------------------------ */

typedef struct sb_beta_points sb_beta_points;

typedef struct sb_beta_point_info {
  double beta;
  int converged;
  size_t iterations;
} sb_beta_point_info;

typedef struct sb_sorm_factor {
  double det_value;
  double correction;
  double probability;
} sb_sorm_factor;

/* starts == NULL selects the default start battery. */
SB_API sb_status sb_find_beta_points(const sb_lsf* lsf, const double* starts, size_t n_starts,
                                     sb_beta_points** out);
SB_API void sb_beta_points_destroy(sb_beta_points* points);
SB_API size_t sb_beta_points_count(const sb_beta_points* points);
SB_API size_t sb_beta_points_starts_failed(const sb_beta_points* points);
SB_API sb_status sb_beta_point(const sb_beta_points* points, size_t index, double* location,
                               sb_beta_point_info* info);
SB_API sb_status sb_sorm_correction(const sb_lsf* lsf, const sb_beta_points* points, size_t index,
                                    sb_sorm_factor* out);

typedef struct sb_asymptotic_fit {
  double c;
  double b;
  double residual;
  int b_pinned;
} sb_asymptotic_fit;

SB_API sb_status sb_fit_asymptotic(const double* betas, const double* p, size_t n, int pin_b_zero,
                                   sb_asymptotic_fit* out);

/* ---- ensembles and diagnostics ----------------------------------------- */

typedef struct sb_ensemble sb_ensemble;

typedef struct sb_run_info {
  uint64_t seed;
  double estimate;
  size_t levels;
  size_t modes;
  uint64_t total_evals;
  sb_termination terminated;
} sb_run_info;

/* Seed used for run `run` of an ensemble with master seed `master`. */
SB_API uint64_t sb_ensemble_run_seed(uint64_t master, size_t run);
/* threads == 0 uses the hardware concurrency; results do not depend on it. */
SB_API sb_status sb_ensemble_run(const sb_lsf* lsf, const sb_sus_config* cfg, size_t n_runs,
                                 unsigned threads, sb_ensemble** out);
SB_API void sb_ensemble_destroy(sb_ensemble* ensemble);
SB_API size_t sb_ensemble_size(const sb_ensemble* ensemble);
SB_API sb_status sb_ensemble_run_info(const sb_ensemble* ensemble, size_t run, sb_run_info* out);
/* Writes levels values of the run; see sb_run_info.levels. */
SB_API sb_status sb_ensemble_conditional(const sb_ensemble* ensemble, size_t run, double* out);
/* Centroid of the largest failing-sample cluster; SB_NOT_AVAILABLE if none. */
SB_API sb_status sb_ensemble_centroid(const sb_ensemble* ensemble, size_t run, double* out);

typedef struct sb_moments {
  double mean;
  double sd;
  double skewness;
  double excess_kurtosis;
} sb_moments;

typedef struct sb_normality sb_normality;

SB_API sb_status sb_normality_report(const double* estimates, size_t n, sb_normality** out);
SB_API void sb_normality_destroy(sb_normality* report);
SB_API void sb_normality_moments(const sb_normality* report, sb_moments* raw, sb_moments* log10);
SB_API void sb_normality_qq_corr(const sb_normality* report, double* raw, double* log10);
SB_API size_t sb_normality_zero_estimates(const sb_normality* report);
/* log_scale selects the decimal-log qq data. Both arrays receive qq_count values. */
SB_API size_t sb_normality_qq_count(const sb_normality* report, int log_scale);
SB_API void sb_normality_qq(const sb_normality* report, int log_scale, double* theoretical,
                            double* sample);

typedef struct sb_cov_report sb_cov_report;

/* Run r contributes level_counts[r] consecutive values of flat_levels. */
SB_API sb_status sb_delta_cov(const double* flat_levels, const size_t* level_counts, size_t n_runs,
                              const double* estimates, size_t n_estimates, sb_cov_report** out);
SB_API void sb_cov_report_destroy(sb_cov_report* report);
SB_API size_t sb_cov_level_count(const sb_cov_report* report);
SB_API void sb_cov_summary(const sb_cov_report* report, double* combined_cov, double* empirical_cov,
                           size_t* runs_used, size_t* runs_excluded);
SB_API void sb_cov_per_level(const sb_cov_report* report, double* cov);
/* Row-major level_count x level_count. */
SB_API void sb_cov_correlation(const sb_cov_report* report, double* corr);

SB_API sb_status sb_lognormal_ci(const double* estimates, size_t n, double level, double* lower,
                                 double* upper);
SB_API sb_status sb_count_modes(const sb_lsf* lsf, const double* coords, size_t n_points,
                                size_t* out);
SB_API sb_status sb_dominant_cluster(const double* coords, size_t n_points, size_t dim, double link,
                                     double* centroid, size_t* size);
SB_API sb_status sb_safe_set_components(const sb_lsf* lsf, double lo, double hi, size_t grid,
                                        size_t* out);

#ifdef __cplusplus
}
#endif

#endif /* SUSBENCH_H */
