#ifndef GNNSE_H
#define GNNSE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GnnseStatus {
  GNNSE_STATUS_OK = 0,
  GNNSE_STATUS_NULL_POINTER = 1,
  GNNSE_STATUS_INVALID_ARGUMENT = 2,
  GNNSE_STATUS_IO = 3,
  GNNSE_STATUS_PARSE = 4,
  GNNSE_STATUS_NOT_CONVERGED = 5,
  GNNSE_STATUS_TOPOLOGY = 6,
  GNNSE_STATUS_BUFFER_TOO_SMALL = 7,
  GNNSE_STATUS_MODEL = 8,
  GNNSE_STATUS_PANIC = 99,
} GnnseStatus;

/**
 * Parsed network case.
 */
typedef struct GnnseCase GnnseCase;

/**
 * Trained estimator loaded from a model file.
 */
typedef struct GnnseModel GnnseModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *gnnse_last_error(void);

/**
 * Load a MATPOWER or JSON case file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum GnnseStatus gnnse_case_load(const char *path, struct GnnseCase **out);

/**
 * # Safety
 * `case` must be NULL or a handle from [`gnnse_case_load`] not yet freed.
 */
void gnnse_case_free(struct GnnseCase *case_);

/**
 * # Safety
 * `case` must be NULL or a live case handle.
 */
size_t gnnse_case_num_buses(const struct GnnseCase *case_);

/**
 * # Safety
 * `case` must be NULL or a live case handle.
 */
size_t gnnse_case_num_branches(const struct GnnseCase *case_);

/**
 * Solve the nominal operating point. `outage` is a branch row index or -1
 * for the intact network. `vm` and `va_deg` receive one value per bus.
 *
 * # Safety
 * `vm` and `va_deg` must each point to `len` writable doubles.
 */
enum GnnseStatus gnnse_power_flow(const struct GnnseCase *case_,
                                  int64_t outage,
                                  double *vm,
                                  double *va_deg,
                                  size_t len);

/**
 * Greedy PMU placement. Writes bus ids into `buses` and the count into
 * `count`. When `cap` is too small, `count` still receives the required size.
 *
 * # Safety
 * `buses` must point to `cap` writable elements; `count` must be writable.
 */
enum GnnseStatus gnnse_place_pmus(const struct GnnseCase *case_,
                                  int64_t outage,
                                  size_t *buses,
                                  size_t cap,
                                  size_t *count);

/**
 * Load a trained model file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum GnnseStatus gnnse_model_load(const char *path, struct GnnseModel **out);

/**
 * # Safety
 * `model` must be NULL or a handle from [`gnnse_model_load`] not yet freed.
 */
void gnnse_model_free(struct GnnseModel *model);

/**
 * Number of buses the model was trained on.
 *
 * # Safety
 * `model` must be NULL or a live model handle.
 */
size_t gnnse_model_num_buses(const struct GnnseModel *model);

/**
 * Estimate bus voltages for `samples` feature rows. Each row holds
 * (vm, va_deg) per bus; the output uses the same layout. Graph models use the
 * case topology with `outage` removed (-1 for none).
 *
 * # Safety
 * `features` must hold `samples * 2 * n` readable doubles and `out` as many
 * writable ones, where `n` is the bus count of `case`.
 */
enum GnnseStatus gnnse_model_predict(const struct GnnseModel *model,
                                     const struct GnnseCase *case_,
                                     int64_t outage,
                                     const double *features,
                                     size_t samples,
                                     double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GNNSE_H */
