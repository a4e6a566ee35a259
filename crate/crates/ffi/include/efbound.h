#ifndef EFBOUND_H
#define EFBOUND_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Mirrors the CLI exit statuses; the last two are ABI-only.
 */
typedef enum EfbStatus {
  EFB_STATUS_OK = 0,
  EFB_STATUS_VERIFICATION_FAILED = 1,
  EFB_STATUS_INPUT_ERROR = 2,
  EFB_STATUS_BUDGET_EXHAUSTED = 3,
  EFB_STATUS_INTERNAL_ERROR = 4,
  EFB_STATUS_NULL_POINTER = 5,
  EFB_STATUS_PANIC = 6,
} EfbStatus;

/**
 * Opaque exact rational matrix.
 */
typedef struct EfbMatrix EfbMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call into the library on this thread.
 */
const char *efb_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void efb_string_free(char *s);

/**
 * Parses `{"rows", "cols", "entries"}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum EfbStatus efb_matrix_from_json(const char *json, struct EfbMatrix **out);

/**
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
enum EfbStatus efb_matrix_to_json(const struct EfbMatrix *m, char **out);

/**
 * # Safety
 * `m` must be a live handle; `rows` and `cols` must be writable.
 */
enum EfbStatus efb_matrix_shape(const struct EfbMatrix *m, size_t *rows, size_t *cols);

/**
 * Entry `(i, j)` as a canonical `"p/q"` string.
 *
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
enum EfbStatus efb_matrix_entry(const struct EfbMatrix *m, size_t i, size_t j, char **out);

/**
 * # Safety
 * `m` must be NULL or a handle from this library, not yet freed.
 */
void efb_matrix_free(struct EfbMatrix *m);

/**
 * Slack matrix of `(COR(n), ρQ(n))`; `rho` is a rational string.
 *
 * # Safety
 * `rho` must be a NUL-terminated string; `out` must be writable.
 */
enum EfbStatus efb_hardpair_slack(size_t n, const char *rho, struct EfbMatrix **out);

/**
 * ρ-extension of unique disjointness with the hard-pair fill.
 *
 * # Safety
 * `rho` must be a NUL-terminated string; `out` must be writable.
 */
enum EfbStatus efb_udisj_shift(size_t n, const char *rho, struct EfbMatrix **out);

/**
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
enum EfbStatus efb_mat_rank(const struct EfbMatrix *m, size_t *out);

/**
 * Rectangle-cover lower bound. On `BudgetExhausted`, `out` holds the best
 * bound found so far.
 *
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
enum EfbStatus efb_rect_cover_lb(const struct EfbMatrix *m, uint64_t max_steps, size_t *out);

/**
 * Certified `lower <= nnegrk(m) <= upper`.
 *
 * # Safety
 * `m` must be a live handle; `lower` and `upper` must be writable.
 */
enum EfbStatus efb_nnegrk_bounds(const struct EfbMatrix *m,
                                 uint64_t seed,
                                 size_t *lower,
                                 size_t *upper);

/**
 * `<T_a, U^b> = (1 - aᵀb)²` for all `a, b ⊆ [n]`; `VerificationFailed`
 * when some pair fails.
 *
 * # Safety
 * `pairs_checked` must be NULL or writable.
 */
enum EfbStatus efb_psd_check(size_t n, uint64_t *pairs_checked);

/**
 * Clique number of a graph given as `{"n", "vertices", "edges"}`.
 *
 * # Safety
 * `graph_json` must be a NUL-terminated string; `out` must be writable.
 */
enum EfbStatus efb_clique_number(const char *graph_json, size_t *out);

/**
 * Checks `P ⊆ K ⊆ ρQ`. Writes the report to `report`; on failure also
 * writes the certificate to `certificate` (when non-NULL) and returns
 * `VerificationFailed`.
 *
 * # Safety
 * String arguments must be NUL-terminated; `report` must be writable and
 * `certificate` NULL or writable.
 */
enum EfbStatus efb_verify_sandwich(const char *p_json,
                                   const char *q_json,
                                   const char *rho,
                                   const char *ef_json,
                                   char **report,
                                   char **certificate);

/**
 * Re-verifies a certificate; `valid` receives the verdict.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `valid` must be writable.
 */
enum EfbStatus efb_check_certificate(const char *json, bool *valid);

/**
 * # Safety
 * `out` must be writable.
 */
enum EfbStatus efb_corruption_rhs(double eps, double c, size_t l, double *out);

/**
 * Lower bound on the nonnegative rank of a ρ-extension; pass NaN as
 * `eps` for `ε = 1/(2ρ)`.
 *
 * # Safety
 * `rho` must be a NUL-terminated string; `out` must be writable.
 */
enum EfbStatus efb_shift_rank_lb(size_t n, const char *rho, double eps, double c, double *out);

/**
 * Static version string.
 */
const char *efb_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EFBOUND_H */
