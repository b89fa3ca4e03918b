#ifndef SLRA_H
#define SLRA_H

/* This file is generated by cbindgen from slra-ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Which branch produced a low-rank factor.
 */
typedef enum SlraBranch {
  SLRA_BRANCH_W1 = 1,
  SLRA_BRANCH_W2 = 2,
  SLRA_BRANCH_EXACT_FALLBACK = 3,
  SLRA_BRANCH_LAZY_SVD = 4,
} SlraBranch;

/**
 * Status codes returned by every fallible call.
 */
typedef enum SlraStatus {
  SLRA_OK = 0,
  SLRA_ERR_INVALID_ARGUMENT = 1,
  SLRA_ERR_CONTRACT = 2,
  SLRA_ERR_NUMERIC = 3,
  SLRA_ERR_IO = 4,
  SLRA_ERR_PANIC = 5,
} SlraStatus;

/**
 * Opaque dense matrix handle.
 */
typedef struct SlraMatrix SlraMatrix;

/**
 * Extra outputs of the dual block-size solver.
 */
typedef struct SlraLraInfo {
  enum SlraBranch branch;
  double sigma_hat_k;
  double sigma_hat_bk;
} SlraLraInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message (NUL-terminated) into
 * `buf`, truncating to `len` bytes. Returns the full message length
 * including the terminator, or 0 when no error has been recorded.
 *
 * # Safety
 * `buf` must point to `len` writable bytes, or be null (query mode).
 */
size_t slra_last_error_message(char *buf, size_t len);

/**
 * Creates a matrix from row-major data (`rows * cols` doubles).
 *
 * # Safety
 * `data` must point to `rows * cols` readable doubles; `out` must be a
 * valid location for one pointer.
 */
enum SlraStatus slra_matrix_create(size_t rows,
                                   size_t cols,
                                   const double *data,
                                   struct SlraMatrix **out);

/**
 * Reads a matrix file (Matrix Market or binary, auto-detected).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` a valid pointer location.
 */
enum SlraStatus slra_matrix_read(const char *path, struct SlraMatrix **out);

/**
 * Writes a matrix in the binary format.
 *
 * # Safety
 * `m` must be a live handle; `path` a NUL-terminated string.
 */
enum SlraStatus slra_matrix_write_binary(const struct SlraMatrix *m, const char *path);

/**
 * # Safety
 * `m` must be a live handle (null returns 0).
 */
size_t slra_matrix_rows(const struct SlraMatrix *m);

/**
 * # Safety
 * `m` must be a live handle (null returns 0).
 */
size_t slra_matrix_cols(const struct SlraMatrix *m);

/**
 * Copies the row-major contents into `out` (`len` must be at least
 * `rows * cols`).
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum SlraStatus slra_matrix_copy_data(const struct SlraMatrix *m, double *out, size_t len);

/**
 * Releases a handle. Null is a no-op.
 *
 * # Safety
 * `m` must have come from this library and not been freed before.
 */
void slra_matrix_free(struct SlraMatrix *m);

/**
 * Schatten-p norm (`p >= 1`; pass INFINITY for the operator norm).
 *
 * # Safety
 * Valid handle and writable `out`.
 */
enum SlraStatus slra_schatten_norm(const struct SlraMatrix *m, double p, double *out);

/**
 * Truncated `(p, r)` norm over the top `r` singular values.
 *
 * # Safety
 * Valid handle and writable `out`.
 */
enum SlraStatus slra_truncated_norm(const struct SlraMatrix *m, double p, size_t r, double *out);

/**
 * Dual block-size Schatten-p solver. On success `*w_out` holds the
 * `cols x k` factor and `info_out` (optional) the branch and the Ritz
 * estimates behind the selection.
 *
 * # Safety
 * Valid handle; `w_out` a valid pointer location; `info_out` writable or
 * null.
 */
enum SlraStatus slra_schatten_lra(const struct SlraMatrix *a,
                                  size_t k,
                                  double p,
                                  double eps,
                                  uint64_t seed,
                                  double omega,
                                  double alpha,
                                  struct SlraMatrix **w_out,
                                  struct SlraLraInfo *info_out);

/**
 * Plain sketch-and-solve pipeline (`p > 2`).
 *
 * # Safety
 * Valid handle; `z_out` a valid pointer location.
 */
enum SlraStatus slra_lw_lra(const struct SlraMatrix *a,
                            size_t k,
                            double p,
                            double eps,
                            uint64_t seed,
                            struct SlraMatrix **z_out);

/**
 * Combined sketch + iterative pipeline (`p > 2`).
 *
 * # Safety
 * Valid handle; `z_out` a valid pointer location.
 */
enum SlraStatus slra_combined_lra(const struct SlraMatrix *a,
                                  size_t k,
                                  double p,
                                  double eps,
                                  uint64_t seed,
                                  struct SlraMatrix **z_out);

/**
 * Deflation solver. On success `*v_out` holds the raw `cols x k` basis and
 * `*kappa_out` (optional) its measured condition number (at most 4).
 *
 * # Safety
 * Valid handle; `v_out` a valid pointer location; `kappa_out` writable or
 * null.
 */
enum SlraStatus slra_lazysvd(const struct SlraMatrix *a,
                             size_t k,
                             double eps,
                             double eta,
                             uint64_t seed,
                             struct SlraMatrix **v_out,
                             double *kappa_out);

/**
 * Crossover exponents of the cost model.
 *
 * # Safety
 * `p_star_out` and `p_tilde_out` must be writable.
 */
enum SlraStatus slra_crossover_points(double omega,
                                      double alpha,
                                      double *p_star_out,
                                      double *p_tilde_out);

/**
 * Ratio of `||A (I - W W^T)||_p` to the exact optimum. When the optimum is
 * numerically zero, `*is_absolute_out` is set to 1 and `*ratio_out` carries
 * the absolute residual instead.
 *
 * # Safety
 * Valid handles; `ratio_out` and `is_absolute_out` writable.
 */
enum SlraStatus slra_approximation_ratio(const struct SlraMatrix *a,
                                         const struct SlraMatrix *w,
                                         double p,
                                         double *ratio_out,
                                         int32_t *is_absolute_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SLRA_H */
