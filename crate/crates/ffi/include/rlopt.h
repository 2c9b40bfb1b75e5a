#ifndef RLOPT_H
#define RLOPT_H

/* Generated by cbindgen from the rlopt-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible `rlopt_*` call.
typedef enum rlopt_status {
  RLOPT_OK = 0,
  RLOPT_ERR_NULL_POINTER = 1,
  RLOPT_ERR_INVALID_UTF8 = 2,
  RLOPT_ERR_CONFIG = 3,
  RLOPT_ERR_RUN = 4,
  RLOPT_ERR_OUT_OF_RANGE = 5,
  RLOPT_ERR_PANIC = 6,
} rlopt_status;

// Opaque experiment configuration handle.
typedef struct rlopt_config rlopt_config;

// Opaque handle over a finished batch: per-execution results plus the
// aggregated best-so-far curve.
typedef struct rlopt_run rlopt_run;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Last error message for this thread, or NULL if none. The caller owns
// the returned string and must release it with `rlopt_string_free`.
char *rlopt_last_error_message(void);

// Release a string allocated by this library. NULL is a no-op.
void rlopt_string_free(char *s);

// Library version as a static string; do not free.
const char *rlopt_version(void);

// New configuration with all defaults. Release with `rlopt_config_free`.
struct rlopt_config *rlopt_config_new(void);

// Parse a configuration from TOML text into `out`.
//
// # Safety
// `text` must be a valid NUL-terminated string and `out` a valid pointer.
enum rlopt_status rlopt_config_from_toml(const char *text, struct rlopt_config **out);

// Set one configuration key from its TOML value, e.g.
// (`"bandit.policy"`, `"\"softmax\""`) or (`"episodes_bo"`, `"15"`).
//
// # Safety
// `cfg` must be a live handle; `key` and `value` valid strings.
enum rlopt_status rlopt_config_set(struct rlopt_config *cfg, const char *key, const char *value);

// Serialize the resolved configuration to TOML; NULL on null handle.
// The caller owns the returned string.
//
// # Safety
// `cfg` must be a live handle or NULL.
char *rlopt_config_to_toml(const struct rlopt_config *cfg);

// Release a configuration handle. NULL is a no-op.
//
// # Safety
// `cfg` must be a handle from this library, released at most once.
void rlopt_config_free(struct rlopt_config *cfg);

// Execute the configured batch, producing a result handle in `out`.
//
// # Safety
// `cfg` must be a live handle and `out` a valid pointer.
enum rlopt_status rlopt_run_batch(const struct rlopt_config *cfg, struct rlopt_run **out);

// Number of executions in the batch; 0 on null handle.
//
// # Safety
// `run` must be a live handle or NULL.
size_t rlopt_run_n_executions(const struct rlopt_run *run);

// Meta-episodes per execution (length of the best-so-far curve).
//
// # Safety
// `run` must be a live handle or NULL.
size_t rlopt_run_curve_len(const struct rlopt_run *run);

// Final objective value of one execution.
//
// # Safety
// `run` must be a live handle; `out` a valid pointer.
enum rlopt_status rlopt_run_best_value(const struct rlopt_run *run, size_t execution, double *out);

// Incumbent θ = (α, ε, γ, λ) of one execution, written to `out[0..4]`.
//
// # Safety
// `run` must be a live handle; `out` must point at 4 writable doubles.
enum rlopt_status rlopt_run_best_theta(const struct rlopt_run *run, size_t execution, double *out);

// Queries consumed by one execution.
//
// # Safety
// `run` must be a live handle; `out` a valid pointer.
enum rlopt_status rlopt_run_total_queries(const struct rlopt_run *run,
                                          size_t execution,
                                          uint64_t *out);

// Cross-execution mean of the best-so-far curve at one meta-episode.
//
// # Safety
// `run` must be a live handle; `out` a valid pointer.
enum rlopt_status rlopt_run_curve_mean(const struct rlopt_run *run,
                                       size_t meta_episode,
                                       double *out);

// Release a run handle. NULL is a no-op.
//
// # Safety
// `run` must be a handle from this library, released at most once.
void rlopt_run_free(struct rlopt_run *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RLOPT_H */
