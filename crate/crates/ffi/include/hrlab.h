#ifndef HRLAB_H
#define HRLAB_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum HrlabStatus {
  HRLAB_STATUS_OK = 0,
  HRLAB_STATUS_NULL_POINTER = 1,
  HRLAB_STATUS_INVALID_INPUT = 2,
  HRLAB_STATUS_DOMAIN = 3,
  HRLAB_STATUS_NUMERIC = 4,
  HRLAB_STATUS_UNSUPPORTED = 5,
  HRLAB_STATUS_CONFIG = 6,
  HRLAB_STATUS_IO = 7,
  HRLAB_STATUS_INVALID_UTF8 = 8,
  HRLAB_STATUS_PANIC = 9,
} HrlabStatus;

/**
 * Three-valued series verdict.
 */
typedef enum HrlabVerdict {
  HRLAB_VERDICT_CONVERGES = 0,
  HRLAB_VERDICT_DIVERGES = 1,
  HRLAB_VERDICT_INCONCLUSIVE = 2,
} HrlabVerdict;

/**
 * Opaque law of X.
 */
typedef struct HrlabDist HrlabDist;

/**
 * Opaque parsed scenario.
 */
typedef struct HrlabScenario HrlabScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message from the latest call on this thread if it failed, else NULL.
 * Valid until the next call into the library on the same thread.
 */
const char *hrlab_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *hrlab_version(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, freed once.
 */
void hrlab_string_free(char *s);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum HrlabStatus hrlab_dist_rademacher(struct HrlabDist **out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum HrlabStatus hrlab_dist_gaussian(double sigma, struct HrlabDist **out);

/**
 * Symmetric Pareto: `P(|X| ≥ λ) = min(1, (scale/λ)^q)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum HrlabStatus hrlab_dist_pareto(double q, double scale, struct HrlabDist **out);

/**
 * Atoms `±values[i]` with mass `probs[i]` each, plus `p0` at zero.
 *
 * # Safety
 * `values` and `probs` must point to `len` doubles; `out` must be valid.
 */
enum HrlabStatus hrlab_dist_atomic(const double *values,
                                   const double *probs,
                                   size_t len,
                                   double p0,
                                   struct HrlabDist **out);

/**
 * The divergent construction truncated to `levels` levels.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum HrlabStatus hrlab_dist_counterexample(uint32_t levels, struct HrlabDist **out);

/**
 * # Safety
 * `d` must be NULL or a handle from this library, freed once.
 */
void hrlab_dist_free(struct HrlabDist *d);

/**
 * `P(|X| ≥ lambda)`.
 *
 * # Safety
 * `d` must be a live handle and `out` a valid pointer.
 */
enum HrlabStatus hrlab_dist_tail(const struct HrlabDist *d, double lambda, double *out);

/**
 * `E[|X|^nu 1{|X| < b}]`.
 *
 * # Safety
 * `d` must be a live handle and `out` a valid pointer.
 */
enum HrlabStatus hrlab_dist_truncated_moment(const struct HrlabDist *d,
                                             double nu,
                                             double b,
                                             double *out);

/**
 * `Σ n τ_n P(|X| ≥ ε a_n)` for `τ_n = n^beta` and `a_n = n^alpha`, both
 * from n = 1, summed to `horizon`.
 *
 * # Safety
 * `d` must be a live handle; `verdict` and `partial_sum` valid pointers.
 */
enum HrlabStatus hrlab_condition_ii_power(const struct HrlabDist *d,
                                          double beta,
                                          double alpha,
                                          double eps,
                                          uint64_t horizon,
                                          enum HrlabVerdict *verdict,
                                          double *partial_sum);

/**
 * Monte Carlo `P(|S_n| ≥ threshold)` and its standard error.
 *
 * # Safety
 * `d` must be a live handle; `p_hat` and `std_err` valid pointers.
 */
enum HrlabStatus hrlab_estimate_tail(const struct HrlabDist *d,
                                     uint64_t n,
                                     double threshold,
                                     uint64_t seed,
                                     uint64_t replicates,
                                     double *p_hat,
                                     double *std_err);

/**
 * Certificate totals for the divergent construction.
 *
 * # Safety
 * `cumulative` and `phi_moment` must be valid pointers.
 */
enum HrlabStatus hrlab_counterexample_certificate(uint32_t levels,
                                                  double *cumulative,
                                                  double *phi_moment);

/**
 * Parses and validates scenario TOML.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HrlabStatus hrlab_scenario_parse(const char *toml, struct HrlabScenario **out);

/**
 * Loads a bundled scenario by name.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HrlabStatus hrlab_scenario_bundled(const char *name, struct HrlabScenario **out);

/**
 * # Safety
 * `s` must be NULL or a handle from this library, freed once.
 */
void hrlab_scenario_free(struct HrlabScenario *s);

/**
 * Runs every check and hands back the report JSON (free it with
 * [`hrlab_string_free`]). `success` is 1 when every check met its
 * expectation.
 *
 * # Safety
 * `s` must be a live handle; `report_json` and `success` valid pointers.
 */
enum HrlabStatus hrlab_scenario_run(const struct HrlabScenario *s,
                                    char **report_json,
                                    int32_t *success);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HRLAB_H */
