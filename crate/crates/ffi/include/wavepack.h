#ifndef WAVEPACK_H
#define WAVEPACK_H

#pragma once

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WpStatus {
  WP_STATUS_OK = 0,
  WP_STATUS_NULL_POINTER = 1,
  WP_STATUS_INVALID_ARGUMENT = 2,
  WP_STATUS_SHAPE_MISMATCH = 3,
  WP_STATUS_NOT_INVERTIBLE = 4,
  WP_STATUS_BUFFER_TOO_SMALL = 5,
  WP_STATUS_NUMERICAL_FAILURE = 6,
  WP_STATUS_PANIC = 7,
} WpStatus;

/**
 * Which of the four filters [`wp_filter_coefficients`] copies out.
 */
typedef enum WpFilterKind {
  WP_FILTER_KIND_DEC_LO = 0,
  WP_FILTER_KIND_DEC_HI = 1,
  WP_FILTER_KIND_REC_LO = 2,
  WP_FILTER_KIND_REC_HI = 3,
} WpFilterKind;

typedef enum WpBoundaryMode {
  WP_BOUNDARY_MODE_TRUNCATED = 0,
  WP_BOUNDARY_MODE_GRAM_SCHMIDT = 1,
} WpBoundaryMode;

typedef enum WpOrdering {
  WP_ORDERING_NATURAL = 0,
  WP_ORDERING_FREQUENCY = 1,
} WpOrdering;

/**
 * Opaque filter bank handle.
 */
typedef struct WpFilter WpFilter;

/**
 * Opaque sparse operator handle.
 */
typedef struct WpOperator WpOperator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error of this thread as a NUL-terminated string into
 * `buf` (truncating) and returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t wp_last_error(char *buf, size_t len);

/**
 * Looks up a builtin filter bank (`haar`, `db1`..`db5`, `sym4`, `sym5`).
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum WpStatus wp_filter_new(const char *name, struct WpFilter **out);

/**
 * # Safety
 * `filter` must be null or a handle from [`wp_filter_new`] not yet freed.
 */
void wp_filter_free(struct WpFilter *filter);

/**
 * Number of taps.
 *
 * # Safety
 * `filter` must be a live handle; `out` must be writable.
 */
enum WpStatus wp_filter_length(const struct WpFilter *filter, size_t *out);

/**
 * Copies one of the four filters into `out` (at least the filter length).
 *
 * # Safety
 * `filter` must be a live handle; `out` must be valid for `len` values.
 */
enum WpStatus wp_filter_coefficients(const struct WpFilter *filter,
                                     enum WpFilterKind kind,
                                     double *out,
                                     size_t len);

/**
 * Largest perfect-reconstruction and alias residuals; `passes` is set to 1
 * when both are below 1e-10.
 *
 * # Safety
 * `filter` must be a live handle; the outputs must be writable or null.
 */
enum WpStatus wp_filter_verify(const struct WpFilter *filter,
                               double *pr_residual,
                               double *alias_residual,
                               int32_t *passes);

/**
 * Multi-level 1D analysis operator for signals of length `len`.
 *
 * # Safety
 * `filter` must be a live handle; `out` must be writable.
 */
enum WpStatus wp_operator_analysis_1d(const struct WpFilter *filter,
                                      size_t len,
                                      size_t levels,
                                      enum WpBoundaryMode mode,
                                      struct WpOperator **out);

/**
 * Multi-level 1D synthesis operator.
 *
 * # Safety
 * As [`wp_operator_analysis_1d`].
 */
enum WpStatus wp_operator_synthesis_1d(const struct WpFilter *filter,
                                       size_t len,
                                       size_t levels,
                                       enum WpBoundaryMode mode,
                                       struct WpOperator **out);

/**
 * Multi-level 2D analysis operator on row-major `height × width` planes.
 *
 * # Safety
 * As [`wp_operator_analysis_1d`].
 */
enum WpStatus wp_operator_analysis_2d(const struct WpFilter *filter,
                                      size_t height,
                                      size_t width,
                                      size_t levels,
                                      enum WpBoundaryMode mode,
                                      struct WpOperator **out);

/**
 * Multi-level 2D synthesis operator.
 *
 * # Safety
 * As [`wp_operator_analysis_1d`].
 */
enum WpStatus wp_operator_synthesis_2d(const struct WpFilter *filter,
                                       size_t height,
                                       size_t width,
                                       size_t levels,
                                       enum WpBoundaryMode mode,
                                       struct WpOperator **out);

/**
 * # Safety
 * `op` must be null or a live operator handle.
 */
void wp_operator_free(struct WpOperator *op);

/**
 * Rows, columns and stored nonzeros; any output may be null.
 *
 * # Safety
 * `op` must be a live handle.
 */
enum WpStatus wp_operator_shape(const struct WpOperator *op,
                                size_t *rows,
                                size_t *cols,
                                size_t *nnz);

/**
 * Copies the nonzeros in row-major order into three arrays of length
 * `cap` (at least nnz).
 *
 * # Safety
 * `op` must be a live handle; each array must be valid for `cap` values.
 */
enum WpStatus wp_operator_triplets(const struct WpOperator *op,
                                   size_t *rows,
                                   size_t *cols,
                                   double *values,
                                   size_t cap);

/**
 * `y = op · x`.
 *
 * # Safety
 * `op` must be a live handle; `x` valid for `x_len`, `y` for `y_len` values.
 */
enum WpStatus wp_operator_apply(const struct WpOperator *op,
                                const double *x,
                                size_t x_len,
                                double *y,
                                size_t y_len);

/**
 * Level-`level` packet transform of a `channels × height × width` image.
 * `out` receives `channels · height · width` values.
 *
 * # Safety
 * `filter` must be a live handle; `image` and `out` valid for their lengths.
 */
enum WpStatus wp_wpt2d(const struct WpFilter *filter,
                       const double *image,
                       size_t channels,
                       size_t height,
                       size_t width,
                       size_t level,
                       enum WpBoundaryMode mode,
                       enum WpOrdering ordering,
                       double *out,
                       size_t out_len);

/**
 * Inverse of [`wp_wpt2d`] with the same shape arguments.
 *
 * # Safety
 * As [`wp_wpt2d`].
 */
enum WpStatus wp_iwpt2d(const struct WpFilter *filter,
                        const double *packets,
                        size_t channels,
                        size_t height,
                        size_t width,
                        size_t level,
                        enum WpBoundaryMode mode,
                        enum WpOrdering ordering,
                        double *out,
                        size_t out_len);

/**
 * Writes the label of packet `index` as a NUL-terminated string; `len`
 * must exceed the level.
 *
 * # Safety
 * `buf` must be valid for `len` bytes.
 */
enum WpStatus wp_packet_label(size_t index,
                              size_t level,
                              enum WpOrdering ordering,
                              char *buf,
                              size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WAVEPACK_H */
