#ifndef KRONSAMPLE_H
#define KRONSAMPLE_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KsStatus {
  KS_STATUS_OK = 0,
  KS_STATUS_NULL_POINTER = 1,
  /**
   * Bad shapes, indices or values.
   */
  KS_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The budget cannot meet the per-domain minima.
   */
  KS_STATUS_INFEASIBLE = 3,
  /**
   * The sampled system does not have full column rank.
   */
  KS_STATUS_UNIDENTIFIABLE = 4,
  KS_STATUS_BUFFER_TOO_SMALL = 5,
  KS_STATUS_INTERNAL = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  KS_STATUS_PANIC = 7,
} KsStatus;

typedef enum KsCore {
  KS_CORE_DENSE = 0,
  KS_CORE_DIAGONAL = 1,
} KsCore;

/**
 * Opaque greedy design with its prepared least-squares operator.
 */
typedef struct KsDesign KsDesign;

/**
 * Opaque factor model.
 */
typedef struct KsModel KsModel;

typedef struct KsMetrics {
  /**
   * `tr((Ψ^H Ψ)^{-1})`, infinite when `unidentifiable` is set.
   */
  double mse;
  double fp;
  double lambda_min;
  double lambda_max;
  size_t sensors;
  uint64_t samples;
  bool unidentifiable;
} KsMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *ks_last_error(void);

/**
 * Builds a model from `order` factors stored back to back. Factor `i` is `rows[i] × cols[i]`,
 * row-major, starting right after factor `i - 1` in `re` (and `im` if not null).
 *
 * # Safety
 * `rows` and `cols` must hold `order` entries; `re` (and `im`) must hold `Σ rows[i]·cols[i]`.
 */
enum KsStatus ks_model_new(enum KsCore core,
                           size_t order,
                           const size_t *rows,
                           const size_t *cols,
                           const double *re,
                           const double *im,
                           struct KsModel **out);

/**
 * # Safety
 * `model` must come from [`ks_model_new`] and not be freed twice. Null is ignored.
 */
void ks_model_free(struct KsModel *model);

/**
 * Total sensor count `Σ N_i`, 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t ks_model_total_sensors(const struct KsModel *model);

/**
 * Number of core coefficients, 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t ks_model_core_len(const struct KsModel *model);

/**
 * Greedy design of `budget` sensors for a dense-core model. `slack` may be null with
 * `slack_len = 0`, otherwise it holds one extra minimum per domain.
 *
 * # Safety
 * `model` must be a live handle, `slack` must hold `slack_len` entries and `out` must be writable.
 */
enum KsStatus ks_greedy_dense(const struct KsModel *model,
                              size_t budget,
                              const size_t *slack,
                              size_t slack_len,
                              struct KsDesign **out);

/**
 * Greedy design for a diagonal-core model. A negative `privileged` picks the default domain.
 *
 * # Safety
 * Same as [`ks_greedy_dense`].
 */
enum KsStatus ks_greedy_diag(const struct KsModel *model,
                             size_t budget,
                             ptrdiff_t privileged,
                             const size_t *slack,
                             size_t slack_len,
                             struct KsDesign **out);

/**
 * # Safety
 * `design` must come from a `ks_greedy_*` call and not be freed twice. Null is ignored.
 */
void ks_design_free(struct KsDesign *design);

/**
 * Copies the kept rows of `domain` (ascending) into `buf`. `len` always receives the count;
 * pass a null `buf` to query it.
 *
 * # Safety
 * `design` must be a live handle, `buf` must hold `cap` entries unless null.
 */
enum KsStatus ks_design_kept(const struct KsDesign *design,
                             size_t domain,
                             size_t *buf,
                             size_t cap,
                             size_t *len);

/**
 * Final greedy objective (`G` or `Q`), NaN for a null handle.
 *
 * # Safety
 * `design` must be null or a live handle.
 */
double ks_design_objective(const struct KsDesign *design);

/**
 * Estimation metrics of the sampled system.
 *
 * # Safety
 * `design` must be a live handle and `out` writable.
 */
enum KsStatus ks_design_metrics(const struct KsDesign *design, struct KsMetrics *out);

/**
 * Least-squares core estimate from the `samples` measurements on the design grid, ordered
 * row-major over the kept rows. `g_re`/`g_im` receive `core_len` values; `g_im` may be null.
 *
 * # Safety
 * Input arrays must hold `len` values and outputs `core_len` values.
 */
enum KsStatus ks_estimate(const struct KsDesign *design,
                          const double *y_re,
                          const double *y_im,
                          size_t len,
                          double *g_re,
                          double *g_im,
                          size_t core_len);

/**
 * Greedy trace as JSON. Free the string with [`ks_string_free`].
 *
 * # Safety
 * `design` must be a live handle and `out` writable.
 */
enum KsStatus ks_design_to_json(const struct KsDesign *design, char **out);

/**
 * # Safety
 * `s` must come from this library and not be freed twice. Null is ignored.
 */
void ks_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KRONSAMPLE_H */
