#ifndef SPARSEPHASE_H
#define SPARSEPHASE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of a linear program.
typedef enum sp_lp_status {
  SP_LP_STATUS_OPTIMAL = 0,
  SP_LP_STATUS_INFEASIBLE = 1,
  SP_LP_STATUS_UNBOUNDED = 2,
} sp_lp_status;

// Polytope whose faces are counted or tested.
typedef enum sp_polytope {
  SP_POLYTOPE_SIMPLEX = 0,
  SP_POLYTOPE_CROSS_POLYTOPE = 1,
} sp_polytope;

// Result code of every fallible call.
typedef enum sp_status {
  SP_STATUS_OK = 0,
  SP_STATUS_NULL_POINTER = 1,
  SP_STATUS_INVALID_ARGUMENT = 2,
  SP_STATUS_DIMENSION_MISMATCH = 3,
  SP_STATUS_SINGULAR = 4,
  SP_STATUS_ITERATION_LIMIT = 5,
  SP_STATUS_PARSE = 6,
  SP_STATUS_IO = 7,
  SP_STATUS_NO_TRANSITION = 8,
  SP_STATUS_TOO_LARGE = 9,
  SP_STATUS_NUMERICAL = 10,
  SP_STATUS_BUFFER_TOO_SMALL = 11,
  SP_STATUS_INTERNAL = 12,
} sp_status;

// Opaque dense matrix.
typedef struct sp_matrix sp_matrix;

// Opaque list of trial records.
typedef struct sp_records sp_records;

// One aggregated Monte Carlo cell.
typedef struct sp_record {
  uint32_t suite;
  uint64_t big_n;
  uint64_t n;
  uint64_t k;
  uint64_t trials;
  uint64_t successes;
} sp_record;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *sp_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *sp_version(void);

// Copies a row-major `rows × cols` array into a new matrix.
//
// # Safety
// `data` must point to `rows * cols` doubles; `out` must be writable.
enum sp_status sp_matrix_new(size_t rows, size_t cols, const double *data, struct sp_matrix **out);

// Samples an `n × big_n` matrix from the ensemble of a suite code.
//
// # Safety
// `out` must be writable.
enum sp_status sp_matrix_sample(uint32_t suite,
                                size_t n,
                                size_t big_n,
                                uint64_t seed,
                                struct sp_matrix **out);

// # Safety
// `m` must be null or a handle from this library not yet freed.
void sp_matrix_free(struct sp_matrix *m);

// # Safety
// `m` must be a live handle.
size_t sp_matrix_rows(const struct sp_matrix *m);

// # Safety
// `m` must be a live handle.
size_t sp_matrix_cols(const struct sp_matrix *m);

// # Safety
// `m` must be a live handle and `out` writable.
enum sp_status sp_matrix_get(const struct sp_matrix *m, size_t i, size_t j, double *out);

// Minimum ℓ1-norm solution of `A x = y`; writes `cols(A)` values to `x`.
//
// # Safety
// `y` must hold `y_len` doubles, `x` must hold `x_len` doubles, `status`
// must be writable and `a` live.
enum sp_status sp_solve_l1(const struct sp_matrix *a,
                           const double *y,
                           size_t y_len,
                           double *x,
                           size_t x_len,
                           enum sp_lp_status *status);

// Minimum-sum nonnegative solution of `A x = y`.
//
// # Safety
// As for [`sp_solve_l1`].
enum sp_status sp_solve_nonneg(const struct sp_matrix *a,
                               const double *y,
                               size_t y_len,
                               double *x,
                               size_t x_len,
                               enum sp_lp_status *status);

// Number of k-faces of the polytope in dimension `big_n`.
//
// # Safety
// `out` must be writable.
enum sp_status sp_face_count(enum sp_polytope kind, size_t big_n, size_t k, uint64_t *out);

// Exact number of k-faces that survive projection by `a`, out of all.
//
// # Safety
// `a` must be live; `survived` and `total` writable.
enum sp_status sp_survival_fraction(const struct sp_matrix *a,
                                    enum sp_polytope kind,
                                    size_t k,
                                    uint64_t budget,
                                    uint64_t *survived,
                                    uint64_t *total);

// Smallest number of dependent columns; 0 when all columns are
// independent.
//
// # Safety
// `a` must be live and `out` writable.
enum sp_status sp_exact_spark(const struct sp_matrix *a, uint64_t budget, size_t *out);

// Two-sample z-score; `defined` is set to 0 when the pooled variance is 0.
//
// # Safety
// `z` and `defined` must be writable.
enum sp_status sp_z_score(uint64_t s0,
                          uint64_t m0,
                          uint64_t s1,
                          uint64_t m1,
                          bool pooled,
                          double *z,
                          bool *defined);

// Reads an `E N n k M S` record file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum sp_status sp_records_read(const char *path, struct sp_records **out);

// Parses record text.
//
// # Safety
// `text` must be a NUL-terminated string and `out` writable.
enum sp_status sp_records_parse(const char *text, struct sp_records **out);

// Locates the transition of one slice and runs `trials` replicates per
// grid point (`workers` = 0 uses every core).
//
// # Safety
// `out` must be writable.
enum sp_status sp_run_slice(uint32_t suite,
                            size_t big_n,
                            size_t n,
                            uint64_t trials,
                            uint64_t pilot_trials,
                            uint64_t seed,
                            size_t workers,
                            struct sp_records **out);

// # Safety
// `r` must be null or a live handle.
void sp_records_free(struct sp_records *r);

// # Safety
// `r` must be a live handle.
size_t sp_records_len(const struct sp_records *r);

// # Safety
// `r` must be live and `out` writable.
enum sp_status sp_records_get(const struct sp_records *r, size_t index, struct sp_record *out);

// # Safety
// `r` must be live and `path` a NUL-terminated string.
enum sp_status sp_records_write(const struct sp_records *r, const char *path);

// LD50 of the `(suite, N, n)` slice.
//
// # Safety
// `r` must be live and `out` writable.
enum sp_status sp_records_ld50(const struct sp_records *r,
                               uint32_t suite,
                               size_t big_n,
                               size_t n,
                               double *out);

// Normalized transition width of the `(suite, N, n)` slice.
//
// # Safety
// `r` must be live and `out` writable.
enum sp_status sp_records_width(const struct sp_records *r,
                                uint32_t suite,
                                size_t big_n,
                                size_t n,
                                double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPARSEPHASE_H */
