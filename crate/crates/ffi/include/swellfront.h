#ifndef SWELLFRONT_H
#define SWELLFRONT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>

// Per-step series stored in a run result.
typedef enum SfSeries {
  SF_SERIES_TIMES = 0,
  SF_SERIES_FRONTS = 1,
  SF_SERIES_SPEEDS = 2,
  SF_SERIES_U_AT_A = 3,
  SF_SERIES_U_AT_S = 4,
  SF_SERIES_INFLOW = 5,
} SfSeries;

typedef enum SfSolver {
  SF_SOLVER_FRONTFIX = 0,
  SF_SOLVER_ORACLE = 1,
} SfSolver;

// Status codes returned by every fallible call.
typedef enum SfStatus {
  SF_STATUS_OK = 0,
  SF_STATUS_NULL_POINTER = 1,
  SF_STATUS_INVALID_UTF8 = 2,
  // Malformed problem file or scheme settings.
  SF_STATUS_CONFIG_ERROR = 3,
  // The instance violates a standing assumption.
  SF_STATUS_INVALID_INSTANCE = 4,
  // Front collapse, boundary solve failure or another solver error.
  SF_STATUS_SOLVER_ERROR = 5,
  // Destination buffer too small or unknown enum value.
  SF_STATUS_OUT_OF_RANGE = 6,
  SF_STATUS_PANIC = 7,
} SfStatus;

// A parsed problem file.
typedef struct SfInstance SfInstance;

// The trajectory of one run.
typedef struct SfRunResult SfRunResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread (or of the last failed
// validation or verification), or an empty string. The pointer stays valid
// until the next call on the same thread.
const char *sf_last_error(void);

// Library version as a static NUL-terminated string.
const char *sf_version(void);

// Parses a TOML problem file.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum SfStatus sf_instance_from_toml(const char *text, struct SfInstance **out);

// # Safety
// `instance` must come from [`sf_instance_from_toml`] and not be used
// afterwards. Null is ignored.
void sf_instance_free(struct SfInstance *instance);

// Checks the standing assumptions; writes whether all of them hold.
//
// # Safety
// Pointers must be valid.
enum SfStatus sf_instance_validate(const struct SfInstance *instance, bool *all_pass);

// Runs a solver with the instance's scheme settings.
//
// # Safety
// Pointers must be valid.
enum SfStatus sf_run(const struct SfInstance *instance,
                     enum SfSolver solver,
                     bool allow_invalid,
                     struct SfRunResult **out);

// # Safety
// `result` must come from [`sf_run`] and not be used afterwards. Null is
// ignored.
void sf_result_free(struct SfRunResult *result);

// Number of time levels, including `t = 0`. Zero for null.
//
// # Safety
// `result` must be null or valid.
size_t sf_result_len(const struct SfRunResult *result);

// Front position at the final time.
//
// # Safety
// Pointers must be valid.
enum SfStatus sf_result_final_front(const struct SfRunResult *result, double *out);

// Copies one per-step series into `buf`, which must hold at least
// [`sf_result_len`] values.
//
// # Safety
// `buf` must be valid for `capacity` writes.
enum SfStatus sf_result_copy_series(const struct SfRunResult *result,
                                    enum SfSeries series,
                                    double *buf,
                                    size_t capacity);

// Runs the single-run verifier; writes whether every check passed.
//
// # Safety
// Pointers must be valid.
enum SfStatus sf_result_verify(const struct SfRunResult *result,
                               const struct SfInstance *instance,
                               bool *pass);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SWELLFRONT_H */
