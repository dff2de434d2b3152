#ifndef HYDROPSEUDO_H
#define HYDROPSEUDO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Suite selection for [`hp_config_set_mode`].
 */
#define HP_MODE_RATIONAL 0

#define HP_MODE_ELLIPTIC 1

#define HP_MODE_N2_CONDITIONS 2

#define HP_MODE_ALL 3

/**
 * Result code of every fallible call.
 */
typedef enum HpStatus {
  HP_STATUS_OK = 0,
  HP_STATUS_NULL_POINTER = 1,
  HP_STATUS_INVALID_UTF8 = 2,
  /**
   * Rejected configuration, JSON or modular parameter.
   */
  HP_STATUS_CONFIG = 3,
  /**
   * Lengths or indices that do not fit together.
   */
  HP_STATUS_DIMENSION = 4,
  /**
   * Input outside the domain: chamber, lattice, poles, branch cut.
   */
  HP_STATUS_DOMAIN = 5,
  /**
   * Numerical breakdown: step underflow, singular block, rank loss.
   */
  HP_STATUS_NUMERICAL = 6,
  /**
   * Output buffer shorter than required; the required size is reported.
   */
  HP_STATUS_BUFFER_TOO_SMALL = 7,
  /**
   * A Rust panic was caught at the boundary.
   */
  HP_STATUS_PANIC = 8,
} HpStatus;

/**
 * Opaque run configuration.
 */
typedef struct HpConfig HpConfig;

/**
 * Opaque verification report.
 */
typedef struct HpReport HpReport;

/**
 * Opaque theta-function context.
 */
typedef struct HpTheta HpTheta;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *hp_version(void);

/**
 * Message of the most recent failure on this thread.
 *
 * # Safety
 * `buf` must be null or point to `capacity` writable bytes; `needed` must be
 * null or writable.
 */
enum HpStatus hp_last_error(char *buf, size_t capacity, size_t *needed);

/**
 * Default configuration: all suites, `n = 3`, seed 42, three trials.
 */
struct HpConfig *hp_config_new(void);

/**
 * Parses and validates a JSON configuration.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum HpStatus hp_config_from_json(const char *json, struct HpConfig **out);

/**
 * # Safety
 * `cfg` must be null or a handle from this library not yet freed.
 */
void hp_config_free(struct HpConfig *cfg);

/**
 * Selects the suites; `mode` is one of the `HP_MODE_*` constants.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum HpStatus hp_config_set_mode(struct HpConfig *cfg, uint32_t mode);

/**
 * Sets the component count, seed and trial count; validated by [`hp_run`].
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum HpStatus hp_config_set_run(struct HpConfig *cfg, size_t n, uint64_t seed, size_t trials);

/**
 * Runs the selected suites; `*out` receives a report handle on success.
 *
 * # Safety
 * `cfg` must be a live handle and `out` writable.
 */
enum HpStatus hp_run(const struct HpConfig *cfg, struct HpReport **out);

/**
 * # Safety
 * `report` must be null or a handle from [`hp_run`] not yet freed.
 */
void hp_report_free(struct HpReport *report);

/**
 * `*passed` becomes true iff every suite stayed below its tolerance.
 *
 * # Safety
 * `report` must be a live handle and `passed` writable.
 */
enum HpStatus hp_report_passed(const struct HpReport *report, bool *passed);

/**
 * Number of suite records.
 *
 * # Safety
 * `report` must be a live handle and `count` writable.
 */
enum HpStatus hp_report_suite_count(const struct HpReport *report, size_t *count);

/**
 * Largest residual of suite `index` (ordered by name); NaN if the suite errored.
 *
 * # Safety
 * `report` must be a live handle and `residual` writable.
 */
enum HpStatus hp_report_suite_residual(const struct HpReport *report,
                                       size_t index,
                                       double *residual);

/**
 * Name of suite `index` into `buf`; see [`hp_report_json`] for the sizing protocol.
 *
 * # Safety
 * As for [`hp_report_json`].
 */
enum HpStatus hp_report_suite_name(const struct HpReport *report,
                                   size_t index,
                                   char *buf,
                                   size_t capacity,
                                   size_t *needed);

/**
 * JSON report into `buf`. `*needed` always receives the size including the
 * NUL; pass a null `buf` to query it.
 *
 * # Safety
 * `report` must be a live handle; `buf` null or `capacity` writable bytes;
 * `needed` null or writable.
 */
enum HpStatus hp_report_json(const struct HpReport *report,
                             char *buf,
                             size_t capacity,
                             size_t *needed);

/**
 * Theta context for `tau = tau_re + i tau_im` with automatic truncation.
 *
 * # Safety
 * `out` must be writable.
 */
enum HpStatus hp_theta_new(double tau_re, double tau_im, struct HpTheta **out);

/**
 * # Safety
 * `ctx` must be null or a handle from [`hp_theta_new`] not yet freed.
 */
void hp_theta_free(struct HpTheta *ctx);

/**
 * `theta(z)` and `theta'(z)`; either output pair may be null.
 *
 * # Safety
 * `ctx` must be a live handle; non-null outputs must be writable.
 */
enum HpStatus hp_theta_eval(const struct HpTheta *ctx,
                            double z_re,
                            double z_im,
                            double (*value)[2],
                            double (*derivative)[2]);

/**
 * Connection matrix `M_i` for the chamber point `u[0..n]` and exponents
 * `s[0..n+2]`, written column-major as `(n+1)^2` real and imaginary parts.
 *
 * # Safety
 * `u` must hold `n` values, `s` must hold `s_len`; `re_out` and `im_out`
 * must each hold `capacity` values.
 */
enum HpStatus hp_connection_matrix(const double *u,
                                   size_t n,
                                   const double *s,
                                   size_t s_len,
                                   size_t i,
                                   double *re_out,
                                   double *im_out,
                                   size_t capacity);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYDROPSEUDO_H */
