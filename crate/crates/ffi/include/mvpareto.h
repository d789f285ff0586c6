#ifndef MVPARETO_H
#define MVPARETO_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a call.
 */
typedef enum MvpStatus {
  MVP_STATUS_OK = 0,
  MVP_STATUS_NULL_POINTER = 1,
  MVP_STATUS_INVALID_ARGUMENT = 2,
  MVP_STATUS_DIMENSION = 3,
  MVP_STATUS_COORDINATE_OUT_OF_RANGE = 4,
  MVP_STATUS_INFINITE_MOMENT = 5,
  MVP_STATUS_NON_CONVERGENCE = 6,
  MVP_STATUS_GUARD = 7,
  MVP_STATUS_INSUFFICIENT_SAMPLE = 8,
  MVP_STATUS_BUFFER_TOO_SMALL = 9,
  MVP_STATUS_PANIC = 10,
} MvpStatus;

/**
 * Named exposure patterns.
 */
typedef enum MvpPreset {
  MVP_PRESET_ARNOLD = 0,
  MVP_PRESET_INDEPENDENT = 1,
  MVP_PRESET_FLEXIBLE_I = 2,
  MVP_PRESET_FLEXIBLE_II = 3,
  MVP_PRESET_EXAMPLE13 = 4,
} MvpPreset;

/**
 * What a risk measure is taken of.
 */
typedef enum MvpTarget {
  /**
   * Risk `index`.
   */
  MVP_TARGET_MARGIN = 0,
  /**
   * Minimum over every risk.
   */
  MVP_TARGET_MINIMA = 1,
  /**
   * Maximum over every risk.
   */
  MVP_TARGET_MAXIMA = 2,
} MvpTarget;

/**
 * Sampling representation.
 */
typedef enum MvpRepresentation {
  MVP_REPRESENTATION_BACKGROUND_RISK = 0,
  MVP_REPRESENTATION_COMMON_SHOCK = 1,
} MvpRepresentation;

/**
 * Opaque portfolio handle.
 */
typedef struct MvpPortfolio MvpPortfolio;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a portfolio from an `n × (n+1)` row-major 0/1 exposure matrix,
 * `n` scales and `n + 1` factor shapes.
 *
 * # Safety
 * `exposure` must point to `n * (n + 1)` bytes, `sigma` to `n` doubles,
 * `gamma` to `n + 1` doubles, and `out` must be writable.
 */
enum MvpStatus mvp_portfolio_new(size_t n,
                                 const uint8_t *exposure,
                                 const double *sigma,
                                 const double *gamma,
                                 struct MvpPortfolio **out);

/**
 * Builds a portfolio from a named exposure pattern.
 *
 * # Safety
 * `sigma` must point to `n` doubles, `gamma` to `n + 1` doubles, and `out`
 * must be writable.
 */
enum MvpStatus mvp_portfolio_preset(enum MvpPreset kind,
                                    size_t n,
                                    const double *sigma,
                                    const double *gamma,
                                    struct MvpPortfolio **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `p` must come from this library and not be used afterwards.
 */
void mvp_portfolio_free(struct MvpPortfolio *p);

/**
 * Number of risks.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum MvpStatus mvp_portfolio_dim(const struct MvpPortfolio *p, size_t *out);

/**
 * Tail index of every margin, written to `out[0..n]`.
 *
 * # Safety
 * `p` must be a live handle and `out` must hold `len` doubles.
 */
enum MvpStatus mvp_marginal_indices(const struct MvpPortfolio *p, double *out, size_t len);

/**
 * Joint survival `P[X_1 > x_1, ..., X_n > x_n]`.
 *
 * # Safety
 * `x` must point to `len` doubles and `out` must be writable.
 */
enum MvpStatus mvp_joint_ddf(const struct MvpPortfolio *p,
                             const double *x,
                             size_t len,
                             double *out);

/**
 * Joint density.
 *
 * # Safety
 * `x` must point to `len` doubles and `out` must be writable.
 */
enum MvpStatus mvp_joint_pdf(const struct MvpPortfolio *p,
                             const double *x,
                             size_t len,
                             double *out);

/**
 * Marginal survival of risk `i`.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum MvpStatus mvp_marginal_ddf(const struct MvpPortfolio *p, size_t i, double x, double *out);

/**
 * Mean of risk `i`.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum MvpStatus mvp_marginal_mean(const struct MvpPortfolio *p, size_t i, double *out);

/**
 * Variance of risk `i`.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum MvpStatus mvp_marginal_var(const struct MvpPortfolio *p, size_t i, double *out);

/**
 * Covariance of risks `k` and `l`.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum MvpStatus mvp_covariance(const struct MvpPortfolio *p, size_t k, size_t l, double *out);

/**
 * Pearson correlation of risks `k` and `l`.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum MvpStatus mvp_correlation(const struct MvpPortfolio *p, size_t k, size_t l, double *out);

/**
 * `P[X_k > x_k | X_l = x_l]`.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum MvpStatus mvp_conditional_ddf_eq(const struct MvpPortfolio *p,
                                      size_t k,
                                      size_t l,
                                      double x_k,
                                      double x_l,
                                      double *out);

/**
 * `P[X_k > x_k | X_l > x_l]`.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum MvpStatus mvp_conditional_ddf_gt(const struct MvpPortfolio *p,
                                      size_t k,
                                      size_t l,
                                      double x_k,
                                      double x_l,
                                      double *out);

/**
 * `E[X_k | X_l = x_l] - E[X_k]`.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum MvpStatus mvp_centred_regression(const struct MvpPortfolio *p,
                                      size_t k,
                                      size_t l,
                                      double x_l,
                                      double *out);

/**
 * Survival of the minimum over `subset` (1-based coordinates). An empty
 * subset means every risk.
 *
 * # Safety
 * `subset` must point to `len` entries and `out` must be writable.
 */
enum MvpStatus mvp_minima_ddf(const struct MvpPortfolio *p,
                              const size_t *subset,
                              size_t len,
                              double x,
                              double *out);

/**
 * Survival of the maximum over every risk.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum MvpStatus mvp_maxima_ddf(const struct MvpPortfolio *p, double x, double *out);

/**
 * Value at risk at level `q`. `index` is used by `Margin` only.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum MvpStatus mvp_var(const struct MvpPortfolio *p,
                       enum MvpTarget target,
                       size_t index,
                       double q,
                       double *out);

/**
 * Conditional tail expectation at level `q`. `index` is used by `Margin` only.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum MvpStatus mvp_cte(const struct MvpPortfolio *p,
                       enum MvpTarget target,
                       size_t index,
                       double q,
                       double *out);

/**
 * `E[X_k | X_l > VaR_q(X_l)]`.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum MvpStatus mvp_economic_cte(const struct MvpPortfolio *p,
                                size_t k,
                                size_t l,
                                double q,
                                double *out);

/**
 * Scale whose Pareto-II margin with tail index `gamma_star` defaults before
 * `horizon` with probability `p_default`.
 *
 * # Safety
 * `out` must be writable.
 */
enum MvpStatus mvp_calibrate_sigma(double p_default,
                                   double horizon,
                                   double gamma_star,
                                   double *out);

/**
 * Draws `m` replicates into `out` as an `m × n` row-major array.
 *
 * # Safety
 * `p` must be a live handle and `out` must hold `len` doubles.
 */
enum MvpStatus mvp_sample(const struct MvpPortfolio *p,
                          enum MvpRepresentation representation,
                          size_t m,
                          uint64_t seed,
                          double *out,
                          size_t len);

/**
 * Copies the calling thread's last error message into `buf` as a
 * NUL-terminated string, truncating to `len - 1` bytes. Returns the full
 * message length in bytes (without the terminator), 0 when the last call
 * succeeded.
 *
 * # Safety
 * `buf` must hold `len` bytes, or be null with `len == 0`.
 */
size_t mvp_last_error_message(char *buf, size_t len);

/**
 * Static name of a status code.
 */
const char *mvp_status_name(enum MvpStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MVPARETO_H */
