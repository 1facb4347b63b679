#ifndef NEXTPOI_H
#define NEXTPOI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum NextpoiStatus {
  NEXTPOI_STATUS_OK = 0,
  NEXTPOI_STATUS_NULL_POINTER = 1,
  NEXTPOI_STATUS_INVALID_ARGUMENT = 2,
  NEXTPOI_STATUS_IO = 3,
  NEXTPOI_STATUS_PARSE = 4,
  NEXTPOI_STATUS_FORMAT = 5,
  NEXTPOI_STATUS_NUMERICAL = 6,
  NEXTPOI_STATUS_BUDGET_EXCEEDED = 7,
  NEXTPOI_STATUS_INTERNAL = 8,
  NEXTPOI_STATUS_PANIC = 9,
} NextpoiStatus;

/**
 * Check-in data loaded or generated on the Rust side.
 */
typedef struct NextpoiDataset NextpoiDataset;

/**
 * POI latent factors, from training or a checkpoint.
 */
typedef struct NextpoiModel NextpoiModel;

/**
 * Training knobs. Start from [`nextpoi_train_params_default`].
 */
typedef struct NextpoiTrainParams {
  size_t d;
  size_t iterations;
  /**
   * Total per-client budget.
   */
  double epsilon;
  /**
   * Share of `epsilon` spent on the transition report.
   */
  double split;
  double learning_rate;
  double lambda;
  uint64_t seed;
  /**
   * When false the run uses exact data and is NOT private.
   */
  bool private_mode;
} NextpoiTrainParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *nextpoi_last_error_message(void);

/**
 * Static name of a status code, e.g. `"invalid argument"`.
 */
const char *nextpoi_status_name(int32_t status);

const char *nextpoi_version(void);

/**
 * Random-walk population on a ring of `pois` POIs.
 *
 * # Safety
 * `out` must be a valid pointer to write a handle into.
 */
enum NextpoiStatus nextpoi_dataset_generate(size_t users,
                                            size_t pois,
                                            size_t length,
                                            uint64_t seed,
                                            struct NextpoiDataset **out);

/**
 * Biased ring walk: step forward with probability `forward`, otherwise
 * jump to POI `k` with weight `1/(k+1)^popularity`.
 *
 * # Safety
 * `out` must be a valid pointer to write a handle into.
 */
enum NextpoiStatus nextpoi_dataset_generate_ring(size_t users,
                                                 size_t pois,
                                                 size_t length,
                                                 double forward,
                                                 double popularity,
                                                 uint64_t seed,
                                                 struct NextpoiDataset **out);

/**
 * Reads a check-in file (see the README for the format). Users with a
 * single check-in are dropped.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum NextpoiStatus nextpoi_dataset_load(const char *path, struct NextpoiDataset **out);

/**
 * # Safety
 * `dataset` must be null or a live handle.
 */
size_t nextpoi_dataset_n_users(const struct NextpoiDataset *dataset);

/**
 * # Safety
 * `dataset` must be null or a live handle.
 */
size_t nextpoi_dataset_n_pois(const struct NextpoiDataset *dataset);

/**
 * # Safety
 * `dataset` must be null or a handle not yet freed.
 */
void nextpoi_dataset_free(struct NextpoiDataset *dataset);

struct NextpoiTrainParams nextpoi_train_params_default(void);

/**
 * Runs the full private pipeline (or the exact one when `private_mode` is
 * false) and returns the POI factors.
 *
 * # Safety
 * `dataset` and `params` must be live, `out` a valid pointer.
 */
enum NextpoiStatus nextpoi_train(const struct NextpoiDataset *dataset,
                                 const struct NextpoiTrainParams *params,
                                 struct NextpoiModel **out);

/**
 * Reads a `model.bin` checkpoint.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum NextpoiStatus nextpoi_model_load(const char *path, struct NextpoiModel **out);

/**
 * Writes a `model.bin` checkpoint.
 *
 * # Safety
 * `model` must be live and `path` a NUL-terminated string.
 */
enum NextpoiStatus nextpoi_model_save(const struct NextpoiModel *model, const char *path);

/**
 * # Safety
 * `model` must be null or a live handle.
 */
size_t nextpoi_model_n_pois(const struct NextpoiModel *model);

/**
 * # Safety
 * `model` must be null or a live handle.
 */
size_t nextpoi_model_dim(const struct NextpoiModel *model);

/**
 * Copies the `n x d` row-major factor matrix into `out` (`len >= n*d`).
 *
 * # Safety
 * `model` must be live and `out` must hold `len` doubles.
 */
enum NextpoiStatus nextpoi_model_factors(const struct NextpoiModel *model, double *out, size_t len);

/**
 * Top-`k` POIs for a user vector `u` of length `d`, standing at `current`
 * (pass a negative value for no location). Writes `k` POI ids and scores
 * in descending order; ties go to the lower id.
 *
 * # Safety
 * `model` must be live, `u` must hold `d` doubles, `out_pois` and
 * `out_scores` must hold `k` entries (`out_scores` may be null).
 */
enum NextpoiStatus nextpoi_recommend(const struct NextpoiModel *model,
                                     const double *u,
                                     size_t d,
                                     int64_t current,
                                     size_t k,
                                     size_t *out_pois,
                                     double *out_scores);

/**
 * Top-`k` for user `user` of `dataset`, computed the way a client would:
 * its vector is the ridge solution against the model's factors over its
 * whole history, and its location is its latest check-in.
 *
 * # Safety
 * Handles must be live; `out_pois` and `out_scores` must hold `k` entries
 * (`out_scores` may be null).
 */
enum NextpoiStatus nextpoi_recommend_user(const struct NextpoiModel *model,
                                          const struct NextpoiDataset *dataset,
                                          size_t user,
                                          double lambda,
                                          size_t k,
                                          size_t *out_pois,
                                          double *out_scores);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void nextpoi_model_free(struct NextpoiModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEXTPOI_H */
