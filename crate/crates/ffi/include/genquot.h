#ifndef GENQUOT_H
#define GENQUOT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. The first four match the command-line exit codes.
 */
typedef enum GqStatus {
  GQ_STATUS_OK = 0,
  GQ_STATUS_CONDITION_FAILED = 1,
  GQ_STATUS_USAGE = 2,
  GQ_STATUS_NUMERIC = 3,
  GQ_STATUS_NULL_POINTER = 4,
  GQ_STATUS_PANIC = 5,
} GqStatus;

/**
 * Opaque handle to a quotient body.
 */
typedef struct GqBody GqBody;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *gq_last_error_message(void);

/**
 * Library version, a static NUL-terminated string.
 */
const char *gq_version(void);

/**
 * Samples an `n x big_n` Gaussian body from `(master_seed, stream_index)`.
 *
 * # Safety
 * `out` must be a valid pointer; on success it receives a handle to be
 * released with [`gq_body_free`].
 */
enum GqStatus gq_body_sample(size_t n,
                             size_t big_n,
                             uint64_t master_seed,
                             uint64_t stream_index,
                             struct GqBody **out);

/**
 * Body from an `n x big_n` row-major matrix whose columns span `R^n`.
 *
 * # Safety
 * `data` must point to `n * big_n` doubles and `out` must be valid.
 */
enum GqStatus gq_body_from_matrix(const double *data, size_t n, size_t big_n, struct GqBody **out);

/**
 * Body from its text serialization.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` must be valid.
 */
enum GqStatus gq_body_from_text(const char *text, struct GqBody **out);

/**
 * Text serialization of a body. Release with [`gq_string_free`].
 *
 * # Safety
 * `body` must be a live handle and `out` must be valid.
 */
enum GqStatus gq_body_to_text(const struct GqBody *body, char **out);

/**
 * # Safety
 * `body` must be NULL or a handle not yet freed.
 */
void gq_body_free(struct GqBody *body);

/**
 * # Safety
 * `body` must be a live handle; `n` and `big_n` must be valid.
 */
enum GqStatus gq_body_dims(const struct GqBody *body, size_t *n, size_t *big_n);

/**
 * Gauge of `x` in the body; `len` must equal the body dimension.
 *
 * # Safety
 * `body` must be a live handle, `x` must point to `len` doubles and `out`
 * must be valid.
 */
enum GqStatus gq_body_norm(const struct GqBody *body, const double *x, size_t len, double *out);

/**
 * Dual norm `max_j |<g_j, u>|`.
 *
 * # Safety
 * As for [`gq_body_norm`].
 */
enum GqStatus gq_body_dual_norm(const struct GqBody *body,
                                const double *u,
                                size_t len,
                                double *out);

/**
 * Norm of the `n x n` row-major operator `t` acting on the body's space.
 *
 * # Safety
 * `t` must point to `n * n` doubles where `n` is the body dimension.
 */
enum GqStatus gq_body_operator_norm(const struct GqBody *body,
                                    const double *t,
                                    size_t n,
                                    double *out);

/**
 * Runs a verification suite with its default configuration and the
 * built-in thresholds; `trials == 0` keeps the default trial count.
 * Writes the JSON report (release with [`gq_string_free`]) and whether
 * all checks passed.
 *
 * # Safety
 * `suite` must be a NUL-terminated string; `report_json` and `pass` must
 * be valid.
 */
enum GqStatus gq_verify_suite(const char *suite,
                              uint64_t master_seed,
                              size_t trials,
                              char **report_json,
                              bool *pass);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void gq_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GENQUOT_H */
