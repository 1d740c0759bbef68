/* C interface to the tev transmission eigenvalue solver. */

#ifndef TEV_H
#define TEV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of the C interface.
 */
typedef enum TevStatus {
  TEV_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  TEV_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  TEV_STATUS_INVALID_UTF8 = 2,
  /**
   * Invalid configuration (unknown key, bad value, contrast condition).
   */
  TEV_STATUS_CONFIG = 3,
  /**
   * The eigensolver or a factorization failed.
   */
  TEV_STATUS_SOLVER = 4,
  /**
   * Reading or writing files failed.
   */
  TEV_STATUS_IO = 5,
  /**
   * A level or eigenvalue index was out of range.
   */
  TEV_STATUS_OUT_OF_RANGE = 6,
  /**
   * An internal panic was caught at the boundary.
   */
  TEV_STATUS_PANIC = 7,
} TevStatus;

/**
 * Opaque experiment configuration.
 */
typedef struct TevConfig TevConfig;

/**
 * Opaque outcome of a run: the per-level tables of all finished levels.
 */
typedef struct TevResult TevResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *tev_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tev_version(void);

/**
 * New configuration with default settings. Release it with
 * [`tev_config_free`].
 */
struct TevConfig *tev_config_new(void);

/**
 * Parses `key=value` text into a new configuration stored in `*out`.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TevStatus tev_config_parse(const char *text, struct TevConfig **out);

/**
 * Sets one configuration entry, using the keys of the text format.
 * The configuration is left unchanged on failure.
 *
 * # Safety
 * `config` must come from this library; `key` and `value` must be
 * NUL-terminated strings.
 */
enum TevStatus tev_config_set(struct TevConfig *config, const char *key, const char *value);

/**
 * Releases a configuration.
 *
 * # Safety
 * `config` must come from this library or be null.
 */
void tev_config_free(struct TevConfig *config);

/**
 * Runs the multigrid scheme without writing files. On a solver failure
 * the status is `TEV_STATUS_SOLVER` and `*out` still receives the levels
 * finished before the failure; release it with [`tev_result_free`].
 *
 * # Safety
 * `config` must come from this library and `out` be a valid pointer.
 */
enum TevStatus tev_run(const struct TevConfig *config, struct TevResult **out);

/**
 * Number of finished levels.
 *
 * # Safety
 * `result` must come from this library or be null (gives 0).
 */
size_t tev_result_levels(const struct TevResult *result);

/**
 * Mesh size and eigenvalue count of level `level` (0-based).
 *
 * # Safety
 * `result` must come from this library; `h` and `count` must be valid.
 */
enum TevStatus tev_result_level(const struct TevResult *result,
                                size_t level,
                                double *h,
                                size_t *count);

/**
 * Eigenvalue `j` (0-based, tracking order) of level `level` as
 * `k = sqrt(lambda)` with nonnegative real part, and its relative
 * residual. `residual` may be null.
 *
 * # Safety
 * `result` must come from this library; `k_re` and `k_im` must be valid.
 */
enum TevStatus tev_result_eigenvalue(const struct TevResult *result,
                                     size_t level,
                                     size_t j,
                                     double *k_re,
                                     double *k_im,
                                     double *residual);

/**
 * Fitted convergence order of eigenvalue `j` (0-based). Fails with
 * `TEV_STATUS_OUT_OF_RANGE` when fewer than three error points exist.
 *
 * # Safety
 * `result` must come from this library; `slope` must be valid.
 */
enum TevStatus tev_result_order(const struct TevResult *result, size_t j, double *slope);

/**
 * Writes the CSV tables and the error plot into directory `dir`.
 *
 * # Safety
 * `result` must come from this library; `dir` must be a NUL-terminated
 * string.
 */
enum TevStatus tev_result_write(const struct TevResult *result, const char *dir);

/**
 * Releases a result.
 *
 * # Safety
 * `result` must come from this library or be null.
 */
void tev_result_free(struct TevResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TEV_H */
