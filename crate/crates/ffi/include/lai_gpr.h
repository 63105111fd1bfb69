#ifndef LAI_GPR_H
#define LAI_GPR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum LaiStatus {
  LAI_STATUS_OK = 0,
  LAI_STATUS_NULL_POINTER = 1,
  LAI_STATUS_INVALID_ARGUMENT = 2,
  LAI_STATUS_NUMERICAL = 3,
  LAI_STATUS_IO = 4,
  LAI_STATUS_FORMAT = 5,
  LAI_STATUS_INSUFFICIENT_DATA = 6,
  LAI_STATUS_PANIC = 7,
} LaiStatus;

/**
 * Trained GP model.
 */
typedef struct LaiModel LaiModel;

/**
 * Optimizer settings. A `fixed_*` value that is not a positive finite
 * number leaves that hyperparameter free.
 */
typedef struct LaiFitOptions {
  uint32_t restarts;
  uint32_t max_iterations;
  double gradient_tolerance;
  uint64_t seed;
  double fixed_lengthscale;
  double fixed_signal_amp;
  double fixed_noise_std;
} LaiFitOptions;

/**
 * Validation statistics. `r2` is meaningful only when `r2_valid` is 1.
 */
typedef struct LaiStats {
  double rmse;
  double mae;
  double me;
  double r2;
  int32_t r2_valid;
  size_t n;
} LaiStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library and file-format versions, as a static NUL-terminated string.
 */
const char *lai_version(void);

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into the library from the same thread.
 */
const char *lai_last_error_message(void);

struct LaiFitOptions lai_fit_options_default(void);

/**
 * Fits a model to `n` rows of `d` raw band values (row-major) and `n`
 * targets. `options` may be NULL for defaults.
 *
 * # Safety
 * `inputs` must point to `n * d` doubles, `targets` to `n` doubles, and
 * `out` to writable storage for one handle.
 */
enum LaiStatus lai_model_fit(const double *inputs,
                             const double *targets,
                             size_t n,
                             size_t d,
                             const struct LaiFitOptions *options,
                             struct LaiModel **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum LaiStatus lai_model_load(const char *path, struct LaiModel **out);

/**
 * # Safety
 * `model` must be a live handle and `path` a NUL-terminated string.
 */
enum LaiStatus lai_model_save(const struct LaiModel *model, const char *path);

/**
 * Number of bands the model expects; 0 for a NULL handle.
 *
 * # Safety
 * `model` must be NULL or a live handle.
 */
size_t lai_model_input_dim(const struct LaiModel *model);

/**
 * Predictive mean and variance (including observation noise) at one pixel.
 *
 * # Safety
 * `x` must point to `d` doubles; `mean` and `variance` must be writable.
 */
enum LaiStatus lai_model_predict(const struct LaiModel *model,
                                 const double *x,
                                 size_t d,
                                 double *mean,
                                 double *variance);

/**
 * Row-major batch of `n` pixels with `d` bands each.
 *
 * # Safety
 * `x` must point to `n * d` doubles; `means` and `variances` to `n`
 * writable doubles each.
 */
enum LaiStatus lai_model_predict_batch(const struct LaiModel *model,
                                       const double *x,
                                       size_t n,
                                       size_t d,
                                       double *means,
                                       double *variances);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `model` must be NULL or a handle not yet freed.
 */
void lai_model_free(struct LaiModel *model);

/**
 * RMSE, MAE, signed mean error, and squared Pearson correlation of
 * `predicted` against `observed`.
 *
 * # Safety
 * Both arrays must hold `n` doubles and `out` must be writable.
 */
enum LaiStatus lai_compute_stats(const double *predicted,
                                 const double *observed,
                                 size_t n,
                                 struct LaiStats *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LAI_GPR_H */
