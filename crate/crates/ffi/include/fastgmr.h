#ifndef FASTGMR_H
#define FASTGMR_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FastgmrStatus {
  FASTGMR_STATUS_OK = 0,
  FASTGMR_STATUS_NULL_POINTER = 1,
  FASTGMR_STATUS_INVALID_ARGUMENT = 2,
  FASTGMR_STATUS_DIMENSION_MISMATCH = 3,
  FASTGMR_STATUS_NOT_SYMMETRIC = 4,
  FASTGMR_STATUS_RANK_COLLAPSE = 5,
  FASTGMR_STATUS_ITERATION_FAILURE = 6,
  FASTGMR_STATUS_STREAM_ORDER = 7,
  FASTGMR_STATUS_IO = 8,
  FASTGMR_STATUS_DEGENERATE_INPUT = 9,
  FASTGMR_STATUS_PANIC = 10,
} FastgmrStatus;

typedef enum FastgmrSketch {
  FASTGMR_SKETCH_GAUSSIAN = 0,
  FASTGMR_SKETCH_COUNT_SKETCH = 1,
  /**
   * Two nonzeros per column.
   */
  FASTGMR_SKETCH_OSNAP = 2,
  FASTGMR_SKETCH_SRHT = 3,
  FASTGMR_SKETCH_UNIFORM = 4,
  /**
   * Leverage scores of `C` (rows) and `R` (columns).
   */
  FASTGMR_SKETCH_LEVERAGE = 5,
} FastgmrSketch;

typedef enum FastgmrVariant {
  FASTGMR_VARIANT_FAST = 0,
  FASTGMR_VARIANT_PRACTICAL = 1,
} FastgmrVariant;

/**
 * `U diag(sigma) V^T` returned by a stream.
 */
typedef struct FastgmrFactors FastgmrFactors;

/**
 * Dense or sparse matrix.
 */
typedef struct FastgmrMatrix FastgmrMatrix;

/**
 * Single-pass SVD accumulator state.
 */
typedef struct FastgmrStreamSvd FastgmrStreamSvd;

/**
 * Sizes for a single-pass SVD stream (see `StreamSvdConfig`).
 */
typedef struct FastgmrStreamConfig {
  size_t k;
  double epsilon;
  size_t c0;
  size_t r0;
  size_t c;
  size_t r;
  size_t s_c;
  size_t s_r;
  size_t block_size;
  uint64_t seed;
  size_t osnap_p;
} FastgmrStreamConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *fastgmr_version(void);

/**
 * Message of the last failed call on this thread, or null after a
 * successful call. Valid until the next call on the same thread.
 */
const char *fastgmr_last_error_message(void);

/**
 * Copies a column-major `rows x cols` array into a new dense matrix.
 *
 * # Safety
 * `data` must point to `rows * cols` readable values; `out` must be writable.
 */
enum FastgmrStatus fastgmr_matrix_from_dense(size_t rows,
                                             size_t cols,
                                             const double *data,
                                             struct FastgmrMatrix **out);

/**
 * Builds a compressed-sparse-column matrix (`col_ptr` has `cols + 1`
 * entries, `row_idx`/`values` have `col_ptr[cols]`).
 *
 * # Safety
 * The arrays must be readable for the stated lengths; `out` must be writable.
 */
enum FastgmrStatus fastgmr_matrix_from_csc(size_t rows,
                                           size_t cols,
                                           const size_t *col_ptr,
                                           const size_t *row_idx,
                                           const double *values,
                                           struct FastgmrMatrix **out);

/**
 * Loads a Matrix Market (`.mtx`) or libsvm file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum FastgmrStatus fastgmr_matrix_read(const char *path, struct FastgmrMatrix **out);

/**
 * Writes a matrix in Matrix Market format.
 *
 * # Safety
 * `m` must be a live handle and `path` a NUL-terminated string.
 */
enum FastgmrStatus fastgmr_matrix_write(const struct FastgmrMatrix *m, const char *path);

/**
 * Writes the shape of `m`.
 *
 * # Safety
 * `m` must be a live handle; `rows` and `cols` must be writable.
 */
enum FastgmrStatus fastgmr_matrix_shape(const struct FastgmrMatrix *m, size_t *rows, size_t *cols);

/**
 * Copies `m` densely (column-major) into `buf` of `len` values.
 *
 * # Safety
 * `m` must be a live handle; `buf` must be writable for `len` values.
 */
enum FastgmrStatus fastgmr_matrix_copy_dense(const struct FastgmrMatrix *m,
                                             double *buf,
                                             size_t len);

/**
 * # Safety
 * `m` must be null or a handle not yet freed.
 */
void fastgmr_matrix_free(struct FastgmrMatrix *m);

/**
 * Optimal core `C^+ A R^+`. `out_residual` may be null.
 *
 * # Safety
 * Handles must be live; `out_core` must be writable.
 */
enum FastgmrStatus fastgmr_gmr_solve_exact(const struct FastgmrMatrix *a,
                                           const struct FastgmrMatrix *c,
                                           const struct FastgmrMatrix *r,
                                           struct FastgmrMatrix **out_core,
                                           double *out_residual);

/**
 * Sketched core `(S_C C)^+ (S_C A S_R^T) (R S_R^T)^+` with `S_C` of size
 * `s_c x m` and `S_R` of size `s_r x n`. `out_residual` may be null.
 *
 * # Safety
 * Handles must be live; `out_core` must be writable.
 */
enum FastgmrStatus fastgmr_gmr_solve_fast(const struct FastgmrMatrix *a,
                                          const struct FastgmrMatrix *c,
                                          const struct FastgmrMatrix *r,
                                          enum FastgmrSketch family,
                                          size_t s_c,
                                          size_t s_r,
                                          uint64_t seed,
                                          struct FastgmrMatrix **out_core,
                                          double *out_residual);

/**
 * Query-frugal SPSD approximation `K ~ C X C^T` of the RBF kernel
 * `exp(-sigma ||x_i - x_j||^2)` over the columns of `points` (`d x n`).
 * `out_queries` may be null.
 *
 * # Safety
 * `points` must be live; `out_c` and `out_core` must be writable.
 */
enum FastgmrStatus fastgmr_spsd_rbf(const struct FastgmrMatrix *points,
                                    double sigma,
                                    size_t c,
                                    size_t s,
                                    uint64_t seed,
                                    struct FastgmrMatrix **out_c,
                                    struct FastgmrMatrix **out_core,
                                    size_t *out_queries);

/**
 * Suggested sizes for target rank `k` and accuracy `epsilon`.
 *
 * # Safety
 * `out` must be writable.
 */
enum FastgmrStatus fastgmr_stream_config_suggested(size_t k,
                                                   double epsilon,
                                                   uint64_t seed,
                                                   struct FastgmrStreamConfig *out);

/**
 * Starts a single-pass SVD over an `m x n` column stream.
 *
 * # Safety
 * `config` must be readable; `out` must be writable.
 */
enum FastgmrStatus fastgmr_stream_svd_new(const struct FastgmrStreamConfig *config,
                                          size_t m,
                                          size_t n,
                                          enum FastgmrVariant variant,
                                          struct FastgmrStreamSvd **out);

/**
 * Folds columns `[col_offset, col_offset + cols(block))` into the state.
 *
 * # Safety
 * Both handles must be live.
 */
enum FastgmrStatus fastgmr_stream_svd_ingest(struct FastgmrStreamSvd *state,
                                             const struct FastgmrMatrix *block,
                                             size_t col_offset);

/**
 * # Safety
 * `state` must be live; `out` must be writable.
 */
enum FastgmrStatus fastgmr_stream_svd_columns_seen(const struct FastgmrStreamSvd *state,
                                                   size_t *out);

/**
 * Computes the factors from the current state (the state stays usable).
 *
 * # Safety
 * `state` must be live; `out` must be writable.
 */
enum FastgmrStatus fastgmr_stream_svd_finalize(const struct FastgmrStreamSvd *state,
                                               struct FastgmrFactors **out);

/**
 * Writes a checksummed checkpoint of the state.
 *
 * # Safety
 * `state` must be live and `path` a NUL-terminated string.
 */
enum FastgmrStatus fastgmr_stream_svd_save(const struct FastgmrStreamSvd *state, const char *path);

/**
 * Restores a state written by [`fastgmr_stream_svd_save`].
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum FastgmrStatus fastgmr_stream_svd_load(const char *path, struct FastgmrStreamSvd **out);

/**
 * # Safety
 * `state` must be null or a handle not yet freed.
 */
void fastgmr_stream_svd_free(struct FastgmrStreamSvd *state);

/**
 * Shape of the factors: `U` is `m x q`, `V` is `n x q`.
 *
 * # Safety
 * `f` must be live; the outputs must be writable.
 */
enum FastgmrStatus fastgmr_factors_shape(const struct FastgmrFactors *f,
                                         size_t *m,
                                         size_t *n,
                                         size_t *q);

/**
 * Copies `U` (column-major, `m * q` values).
 *
 * # Safety
 * `f` must be live; `buf` must be writable for `len` values.
 */
enum FastgmrStatus fastgmr_factors_copy_u(const struct FastgmrFactors *f, double *buf, size_t len);

/**
 * Copies the `q` singular values, nonincreasing.
 *
 * # Safety
 * `f` must be live; `buf` must be writable for `len` values.
 */
enum FastgmrStatus fastgmr_factors_copy_sigma(const struct FastgmrFactors *f,
                                              double *buf,
                                              size_t len);

/**
 * Copies `V` (column-major, `n * q` values).
 *
 * # Safety
 * `f` must be live; `buf` must be writable for `len` values.
 */
enum FastgmrStatus fastgmr_factors_copy_v(const struct FastgmrFactors *f, double *buf, size_t len);

/**
 * # Safety
 * `f` must be null or a handle not yet freed.
 */
void fastgmr_factors_free(struct FastgmrFactors *f);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FASTGMR_H */
