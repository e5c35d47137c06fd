#ifndef DROWSYRANK_H
#define DROWSYRANK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum DrStatus {
  DR_STATUS_OK = 0,
  DR_STATUS_NULL_POINTER = 1,
  DR_STATUS_INVALID_UTF8 = 2,
  DR_STATUS_IO = 3,
  DR_STATUS_FORMAT = 4,
  DR_STATUS_DIMENSION_MISMATCH = 5,
  DR_STATUS_INVALID_ARGUMENT = 6,
  DR_STATUS_BUFFER_TOO_SMALL = 7,
  DR_STATUS_INDEX_OUT_OF_RANGE = 8,
  DR_STATUS_PANIC = 9,
} DrStatus;

// A linear model over already-standardized feature vectors.
typedef struct DrModel DrModel;

// A model together with the feature pipeline it was trained with; scores
// raw frames.
typedef struct DrScorer DrScorer;

// One sensor sample. `direction` is a heading in degrees, `[0, 360)`.
typedef struct DrFrame {
  double t;
  double ax;
  double ay;
  double az;
  double speed;
  double direction;
} DrFrame;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL
// terminated, truncated to `len`). Returns the buffer size needed for the
// whole message, terminator included. The message is empty after a
// successful call.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t dr_last_error_message(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *dr_version(void);

// Loads a model file written by `drowsyrank train`.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum DrStatus dr_model_load(const char *path, struct DrModel **out);

// Builds a model from `dim` weights; features are named `f0`, `f1`, ...
//
// # Safety
// `theta` must point to `dim` doubles; `out` must be writable.
enum DrStatus dr_model_from_weights(const double *theta, size_t dim, struct DrModel **out);

// # Safety
// `model` must be null or a handle from this library not yet freed.
void dr_model_free(struct DrModel *model);

// Number of weights; 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t dr_model_dim(const struct DrModel *model);

// # Safety
// `model` must be a live handle; `out` must be writable.
enum DrStatus dr_model_weight(const struct DrModel *model, size_t index, double *out);

// Copies the name of feature `index` into `buf` as a NUL-terminated
// string. `needed` (optional) receives the size required; when `len` is
// smaller nothing is written and `DR_STATUS_BUFFER_TOO_SMALL` is returned.
//
// # Safety
// `model` must be a live handle; `buf` must point to `len` writable bytes;
// `needed` must be null or writable.
enum DrStatus dr_model_feature_name(const struct DrModel *model,
                                    size_t index,
                                    char *buf,
                                    size_t len,
                                    size_t *needed);

// `θᵀx` for one standardized feature vector of length `len`.
//
// # Safety
// `model` must be a live handle; `x` must point to `len` doubles; `out`
// must be writable.
enum DrStatus dr_model_score(const struct DrModel *model, const double *x, size_t len, double *out);

// Hinge loss of one ordered pair (without the penalty term). Equal
// timestamps are rejected.
//
// # Safety
// `model` must be a live handle; `x_t` and `x_u` must point to `len`
// doubles each; `out` must be writable.
enum DrStatus dr_pair_loss(const struct DrModel *model,
                           const double *x_t,
                           double t,
                           const double *x_u,
                           double u,
                           size_t len,
                           double *out);

// Area under the ROC curve of `n` scores against 0/1 labels (any nonzero
// byte is positive). Ties earn half credit.
//
// # Safety
// `scores` and `labels` must point to `n` elements each; `out` must be
// writable.
enum DrStatus dr_roc_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

// Loads a model and the pipeline file saved next to it by `drowsyrank
// train`.
//
// # Safety
// Both paths must be NUL-terminated strings; `out` must be writable.
enum DrStatus dr_scorer_load(const char *model_path,
                             const char *pipeline_path,
                             struct DrScorer **out);

// # Safety
// `scorer` must be null or a handle from this library not yet freed.
void dr_scorer_free(struct DrScorer *scorer);

// Feature dimension; 0 for a null handle.
//
// # Safety
// `scorer` must be null or a live handle.
size_t dr_scorer_dim(const struct DrScorer *scorer);

// Scores a trip of `n >= 2` frames. The first frame has no predecessor,
// so `n - 1` scores are written to `out` (for frames 1..n); `out_len` must
// be at least `n - 1`.
//
// # Safety
// `scorer` must be a live handle; `frames` must point to `n` frames; `out`
// must point to `out_len` writable doubles.
enum DrStatus dr_scorer_score_trip(const struct DrScorer *scorer,
                                   const struct DrFrame *frames,
                                   size_t n,
                                   double *out,
                                   size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DROWSYRANK_H */
