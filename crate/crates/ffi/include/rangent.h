#ifndef RANGENT_H
#define RANGENT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum {
  RANGENT_STATUS_OK = 0,
  RANGENT_STATUS_NULL_POINTER = 1,
  RANGENT_STATUS_INVALID = 2,
  RANGENT_STATUS_NUMERICAL = 3,
  RANGENT_STATUS_SIZE_GUARD = 4,
  RANGENT_STATUS_IO = 5,
  RANGENT_STATUS_PANIC = 6,
} RangentStatus;

/**
 * Hull algorithm selector for [`rangent_hull`].
 */
typedef enum {
  RANGENT_HULL_METHOD_MONOTONE_CHAIN = 0,
  RANGENT_HULL_METHOD_CHAN = 1,
  RANGENT_HULL_METHOD_PARTITION_MERGE = 2,
} RangentHullMethod;

/**
 * Opaque anchor set of the ball estimator.
 */
typedef struct RangentAnchors RangentAnchors;

/**
 * Opaque hull result.
 */
typedef struct RangentHull RangentHull;

/**
 * Opaque point set.
 */
typedef struct RangentPoints RangentPoints;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until
 * the next call into the library on the same thread.
 */
const char *rangent_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rangent_version(void);

/**
 * Copies `n * d` row-major coordinates into a new point set.
 *
 * # Safety
 * `data` must point to `n * d` readable doubles; `out` must be writable.
 */
RangentStatus rangent_points_new(const double *data, size_t n, size_t d, RangentPoints **out);

/**
 * # Safety
 * `p` must be NULL or a handle from this library not yet freed.
 */
void rangent_points_free(RangentPoints *p);

/**
 * Number of points, 0 for NULL.
 *
 * # Safety
 * `p` must be NULL or a live handle.
 */
size_t rangent_points_len(const RangentPoints *p);

/**
 * Dimension, 0 for NULL.
 *
 * # Safety
 * `p` must be NULL or a live handle.
 */
size_t rangent_points_dim(const RangentPoints *p);

/**
 * Copies the coordinates into `buf`, which must hold exactly `len * dim`
 * doubles.
 *
 * # Safety
 * `p` must be a live handle and `buf` must hold `len` writable doubles.
 */
RangentStatus rangent_points_copy(const RangentPoints *p, double *buf, size_t len);

/**
 * Fits `k` anchors by descending the ball estimator from a k-means++
 * initialization; `normalized` selects the scale-invariant temperature.
 *
 * # Safety
 * `p` must be a live handle; `out` must be writable.
 */
RangentStatus rangent_fit_anchors(const RangentPoints *p,
                                  size_t k,
                                  double alpha,
                                  bool normalized,
                                  size_t steps,
                                  double lr,
                                  uint64_t seed,
                                  RangentAnchors **out);

/**
 * # Safety
 * `a` must be NULL or a handle from this library not yet freed.
 */
void rangent_anchors_free(RangentAnchors *a);

/**
 * Number of anchors, 0 for NULL.
 *
 * # Safety
 * `a` must be NULL or a live handle.
 */
size_t rangent_anchors_k(const RangentAnchors *a);

/**
 * Evaluates the ball entropy estimator. When `grad` is non-NULL it
 * receives the gradient with respect to the points (`grad_len` must be
 * `n * d`).
 *
 * # Safety
 * Handles must be live; `value` writable; `grad` NULL or `grad_len`
 * writable doubles.
 */
RangentStatus rangent_h_diff(const RangentPoints *p,
                             const RangentAnchors *a,
                             double *value,
                             double *grad,
                             size_t grad_len);

/**
 * Computes the 2-D convex hull. `labels` (one per point) is required for
 * [`RangentHullMethod::PartitionMerge`] and ignored otherwise.
 *
 * # Safety
 * `p` must be a live handle; `labels` NULL or `len(p)` readable values;
 * `out` writable.
 */
RangentStatus rangent_hull(const RangentPoints *p,
                           RangentHullMethod method,
                           const size_t *labels,
                           RangentHull **out);

/**
 * # Safety
 * `h` must be NULL or a handle from this library not yet freed.
 */
void rangent_hull_free(RangentHull *h);

/**
 * Number of hull vertices, 0 for NULL.
 *
 * # Safety
 * `h` must be NULL or a live handle.
 */
size_t rangent_hull_len(const RangentHull *h);

/**
 * Hull area, NaN for NULL.
 *
 * # Safety
 * `h` must be NULL or a live handle.
 */
double rangent_hull_area(const RangentHull *h);

/**
 * Primitive operation count, 0 for NULL.
 *
 * # Safety
 * `h` must be NULL or a live handle.
 */
uint64_t rangent_hull_op_count(const RangentHull *h);

/**
 * Copies the counter-clockwise vertices as `x, y` pairs; `len` must be
 * `2 * rangent_hull_len(h)`.
 *
 * # Safety
 * `h` must be a live handle and `buf` must hold `len` writable doubles.
 */
RangentStatus rangent_hull_vertices(const RangentHull *h, double *buf, size_t len);

/**
 * Exact minimum-entropy partition into at least `parts_min` realizable
 * parts. Writes the normalized entropy and, when `labels` is non-NULL,
 * one part label per point (`labels_len` must equal the point count).
 *
 * # Safety
 * `p` must be a live handle; `entropy` writable; `labels` NULL or
 * `labels_len` writable values.
 */
RangentStatus rangent_min_entropy_partition(const RangentPoints *p,
                                            size_t parts_min,
                                            double *entropy,
                                            size_t *labels,
                                            size_t labels_len);

/**
 * Restructures the points with the ball estimator and default estimator
 * settings, returning the displaced set.
 *
 * # Safety
 * `p` must be a live handle; `out` writable.
 */
RangentStatus rangent_restructure(const RangentPoints *p,
                                  double lambda,
                                  double mu,
                                  size_t steps,
                                  double lr,
                                  uint64_t seed,
                                  RangentPoints **out);

/**
 * Reads a point set from a CSV (header row) or JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` writable.
 */
RangentStatus rangent_points_load(const char *path, RangentPoints **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RANGENT_H */
