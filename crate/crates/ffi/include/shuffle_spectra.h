#ifndef SHUFFLE_SPECTRA_H
#define SHUFFLE_SPECTRA_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum SsStatus {
  SS_STATUS_OK = 0,
  SS_STATUS_NULL_POINTER = 1,
  SS_STATUS_INVALID_ARGUMENT = 2,
  SS_STATUS_SIZE_MISMATCH = 3,
  SS_STATUS_NO_CONVERGENCE = 4,
  SS_STATUS_BUFFER_TOO_SMALL = 5,
  SS_STATUS_INTERNAL = 6,
  SS_STATUS_PANIC = 7,
} SsStatus;

/**
 * Location rules accepted across the boundary. Functions take the rule
 * as a `uint32_t` holding one of these values.
 */
typedef enum SsRule {
  SS_RULE_CYCLIC = 0,
  SS_RULE_STAR = 1,
  SS_RULE_UNIFORM_IID = 2,
  SS_RULE_PAK_MEMORY_TWO = 3,
} SsRule;

/**
 * Opaque test statistic handle.
 */
typedef struct SsStatistic SsStatistic;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *ss_last_error(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *ss_version(void);

/**
 * The `m`-th root of `e^z - z - 1` in the upper half plane (`m >= 1`).
 *
 * # Safety
 * `re` and `im` must be valid for writes.
 */
enum SsStatus ss_solve_zeta(uint32_t m, double *re, double *im);

/**
 * Statistic for branch `m` at deck size `n`.
 *
 * # Safety
 * `handle` must be valid for writes. Free the result with
 * [`ss_statistic_free`].
 */
enum SsStatus ss_statistic_new_branch(size_t n, uint32_t m, struct SsStatistic **handle);

/**
 * Statistic from the exact slowest nontrivial eigenvalue (`3 <= n <= 64`).
 *
 * # Safety
 * As for [`ss_statistic_new_branch`].
 */
enum SsStatus ss_statistic_new_slowest_exact(size_t n, struct SsStatistic **handle);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `handle` must come from `ss_statistic_new_*` and not be used afterwards.
 */
void ss_statistic_free(struct SsStatistic *handle);

/**
 * # Safety
 * `handle` must be live; `n` must be valid for writes.
 */
enum SsStatus ss_statistic_n(const struct SsStatistic *handle, size_t *n);

/**
 * # Safety
 * `handle` must be live; `re` and `im` must be valid for writes.
 */
enum SsStatus ss_statistic_lambda(const struct SsStatistic *handle, double *re, double *im);

/**
 * `||f||_2` and `||f||_inf`.
 *
 * # Safety
 * `handle` must be live; `norm2` and `norm_inf` must be valid for writes.
 */
enum SsStatus ss_statistic_norms(const struct SsStatistic *handle, double *norm2, double *norm_inf);

/**
 * Copies the eigenfunction into `re[0..n]` and `im[0..n]`; `len` is the
 * capacity of each buffer.
 *
 * # Safety
 * `handle` must be live; `re` and `im` must be valid for `len` writes.
 */
enum SsStatus ss_statistic_eigenfunction(const struct SsStatistic *handle,
                                         double *re,
                                         double *im,
                                         size_t len);

/**
 * `F(sigma)` for `sigma` given as a card -> state array of length `len`
 * (renewal frame).
 *
 * # Safety
 * `handle` must be live; `card_to_state` must be valid for `len` reads;
 * `re` and `im` must be valid for writes.
 */
enum SsStatus ss_statistic_evaluate(const struct SsStatistic *handle,
                                    const size_t *card_to_state,
                                    size_t len,
                                    double *re,
                                    double *im);

/**
 * `lambda^t ||f||_2^2`.
 *
 * # Safety
 * `handle` must be live; `re` and `im` must be valid for writes.
 */
enum SsStatus ss_statistic_predicted_mean(const struct SsStatistic *handle,
                                          uint64_t t,
                                          double *re,
                                          double *im);

/**
 * # Safety
 * `handle` must be live; `value` must be valid for writes.
 */
enum SsStatus ss_statistic_stationary_second_moment(const struct SsStatistic *handle,
                                                    double *value);

/**
 * # Safety
 * `handle` must be live; `value` must be valid for writes.
 */
enum SsStatus ss_statistic_second_moment_bound(const struct SsStatistic *handle,
                                               uint64_t t,
                                               double *value);

/**
 * Lower bound on the total variation to uniform at time `t`.
 *
 * # Safety
 * `handle` must be live; `value` must be valid for writes.
 */
enum SsStatus ss_statistic_tv_lower_bound(const struct SsStatistic *handle,
                                          uint64_t t,
                                          double *value);

/**
 * Exact total variation to uniform for `t = 0..=horizon` from the
 * identity (`n <= 8`). Writes `horizon + 1` values into `tv`, whose
 * capacity is `len`. `tau_mix` receives the first `t` with tv at most
 * `threshold`, or `UINT64_MAX` if none.
 *
 * # Safety
 * `tv` must be valid for `len` writes and `tau_mix` for one write.
 */
enum SsStatus ss_exact_tv_curve(size_t n,
                                uint32_t rule,
                                double threshold,
                                uint64_t horizon,
                                double *tv,
                                size_t len,
                                uint64_t *tau_mix);

/**
 * One run of the card-marking process. `t` receives the uniform time, or
 * `UINT64_MAX` if `cap` steps passed first; `card_to_state` (capacity
 * `len >= n`) receives the final deck.
 *
 * # Safety
 * `t` must be valid for one write; `card_to_state` for `len` writes.
 */
enum SsStatus ss_uniform_time(size_t n,
                              uint32_t rule,
                              uint64_t seed,
                              uint64_t replica,
                              uint64_t cap,
                              uint64_t *t,
                              size_t *card_to_state,
                              size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHUFFLE_SPECTRA_H */
