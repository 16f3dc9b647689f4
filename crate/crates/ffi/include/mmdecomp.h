#ifndef MMDECOMP_H
#define MMDECOMP_H

/* Generated by cbindgen from crates/ffi/src. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum MmStatus {
  MM_STATUS_OK = 0,
  MM_STATUS_NULL_POINTER = 1,
  MM_STATUS_INVALID_ARGUMENT = 2,
  MM_STATUS_DIMENSION_MISMATCH = 3,
  MM_STATUS_NOT_UNITARY = 4,
  MM_STATUS_INVALID_PLAN = 5,
  MM_STATUS_DECOMPOSITION_FAILED = 6,
  MM_STATUS_FORMAT = 7,
  MM_STATUS_BUFFER_TOO_SMALL = 8,
  MM_STATUS_PANIC = 9,
} MmStatus;

/*
 Opaque dense complex matrix.
 */
typedef struct MmMatrix MmMatrix;

/*
 Opaque decomposition plan.
 */
typedef struct MmPlan MmPlan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread; empty after a success.
 The pointer stays valid until the next call into this library on the
 same thread.
 */
const char *mm_last_error_message(void);

/*
 Builds a `rows x cols` matrix from `2 * rows * cols` interleaved doubles.

 # Safety
 `entries` must point to `2 * rows * cols` readable doubles; `out` must be
 writable.
 */
enum MmStatus mm_matrix_new(size_t rows, size_t cols, const double *entries, struct MmMatrix **out);

/*
 # Safety
 `out` must be writable.
 */
enum MmStatus mm_matrix_identity(size_t n, struct MmMatrix **out);

/*
 Haar-random `n x n` unitary, deterministic in `seed`.

 # Safety
 `out` must be writable.
 */
enum MmStatus mm_matrix_haar_random(size_t n, uint64_t seed, struct MmMatrix **out);

/*
 # Safety
 `m` must be null or a handle from this library not yet freed.
 */
void mm_matrix_free(struct MmMatrix *m);

/*
 # Safety
 `m` must be a live handle; `rows` and `cols` must be writable.
 */
enum MmStatus mm_matrix_shape(const struct MmMatrix *m, size_t *rows, size_t *cols);

/*
 Copies the entries as interleaved doubles into `buf`, which must hold at
 least `2 * rows * cols` values (`len` counts doubles).

 # Safety
 `m` must be a live handle; `buf` must point to `len` writable doubles.
 */
enum MmStatus mm_matrix_entries(const struct MmMatrix *m, double *buf, size_t len);

/*
 Max-norm of `m^dagger m - I`.

 # Safety
 `m` must be a live handle; `out` must be writable.
 */
enum MmStatus mm_matrix_unitarity_defect(const struct MmMatrix *m, double *out);

/*
 Serializes a matrix in the JSON matrix format. Release the string with
 [`mm_string_free`].

 # Safety
 `m` must be a live handle; `out` must be writable.
 */
enum MmStatus mm_matrix_to_json(const struct MmMatrix *m, char **out);

/*
 # Safety
 `json` must be a NUL-terminated string; `out` must be writable.
 */
enum MmStatus mm_matrix_from_json(const char *json, struct MmMatrix **out);

/*
 # Safety
 `s` must be null or a string returned by this library not yet freed.
 */
void mm_string_free(char *s);

/*
 Trace fidelity between a target and a possibly non-unitary matrix.

 # Safety
 `q` and `q_pert` must be live handles; `out` must be writable.
 */
enum MmStatus mm_fidelity(const struct MmMatrix *q, const struct MmMatrix *q_pert, double *out);

/*
 Decomposes `u` into blocks of size at most `m`. A `tol` that is negative
 or NaN selects the default threshold.

 # Safety
 `u` must be a live handle; `out` must be writable.
 */
enum MmStatus mm_decompose(const struct MmMatrix *u, size_t m, double tol, struct MmPlan **out);

/*
 # Safety
 `p` must be null or a handle from this library not yet freed.
 */
void mm_plan_free(struct MmPlan *p);

/*
 Mode count `n`, requested block size `m` and number of factors.

 # Safety
 `p` must be a live handle; output pointers may be null to skip a value.
 */
enum MmStatus mm_plan_info(const struct MmPlan *p, size_t *n, size_t *m, size_t *factor_count);

/*
 Copies the `n` diagonal phases into `buf` (`len` counts doubles).

 # Safety
 `p` must be a live handle; `buf` must point to `len` writable doubles.
 */
enum MmStatus mm_plan_phases(const struct MmPlan *p, double *buf, size_t len);

/*
 Factor `index`: its base row, its `size` columns (written to `columns`,
 which holds `columns_len` entries) and a copy of its block.

 # Safety
 `p` must be a live handle; `size`, `base_row` and `block` must be
 writable; `columns` must point to `columns_len` writable values.
 */
enum MmStatus mm_plan_factor(const struct MmPlan *p,
                             size_t index,
                             size_t *size,
                             size_t *base_row,
                             size_t *columns,
                             size_t columns_len,
                             struct MmMatrix **block);

/*
 `D * Q_N^dagger * ... * Q_1^dagger`.

 # Safety
 `p` must be a live handle; `out` must be writable.
 */
enum MmStatus mm_plan_reconstruct(const struct MmPlan *p, struct MmMatrix **out);

/*
 Reconstruction with Gaussian noise of width `sigma` added to every block.

 # Safety
 `p` must be a live handle; `out` must be writable.
 */
enum MmStatus mm_plan_reconstruct_perturbed(const struct MmPlan *p,
                                            double sigma,
                                            uint64_t seed,
                                            struct MmMatrix **out);

/*
 Serializes a plan in the JSON plan format (1-based indices). Release the
 string with [`mm_string_free`].

 # Safety
 `p` must be a live handle; `out` must be writable.
 */
enum MmStatus mm_plan_to_json(const struct MmPlan *p, char **out);

/*
 Parses and validates a plan.

 # Safety
 `json` must be a NUL-terminated string; `out` must be writable.
 */
enum MmStatus mm_plan_from_json(const char *json, struct MmPlan **out);

/*
 Maximum number of factors for an `n x n` unitary and block size `m`.

 # Safety
 `out` must be writable.
 */
enum MmStatus mm_factor_count_bound(size_t n, size_t m, size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MMDECOMP_H */
