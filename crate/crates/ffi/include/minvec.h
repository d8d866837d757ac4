#ifndef MINVEC_H
#define MINVEC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum MinvecStatus {
  MINVEC_STATUS_OK = 0,
  MINVEC_STATUS_NULL_POINTER = 1,
  MINVEC_STATUS_INVALID_ARGUMENT = 2,
  MINVEC_STATUS_DIMENSION_MISMATCH = 3,
  MINVEC_STATUS_NOT_INJECTIVE = 4,
  MINVEC_STATUS_SOLVER_FAILURE = 5,
  MINVEC_STATUS_CERTIFICATE_FAILURE = 6,
  MINVEC_STATUS_BUFFER_TOO_SMALL = 7,
  MINVEC_STATUS_OUT_OF_RANGE = 8,
  MINVEC_STATUS_PANIC = 9,
} MinvecStatus;

typedef enum MinvecNorm {
  MINVEC_NORM_L1 = 0,
  MINVEC_NORM_L2 = 1,
  MINVEC_NORM_LINF = 2,
} MinvecNorm;

// Square operator with its norm kind.
typedef struct MinvecOperator MinvecOperator;

// Minimal vector, minimal functional and their scalars at one power.
typedef struct MinvecSolution MinvecSolution;

// Per-power records for `n = 1..N`.
typedef struct MinvecTrace MinvecTrace;

typedef struct MinvecSolutionSummary {
  size_t power;
  size_t dim;
  // `d = ‖y‖`.
  double d;
  // `c = f(Qⁿy)`.
  double c;
  // `‖Q*ⁿf‖`.
  double adjoint_norm;
  // `‖x₀ − Qⁿy‖`.
  double residual_norm;
  double eq1_slack;
  double lambda;
} MinvecSolutionSummary;

typedef struct MinvecTraceRow {
  size_t n;
  double d;
  double norm_y;
  // `‖yₙ‖/‖yₙ₋₁‖`; NaN for the first row.
  double ratio;
  double eq1_slack;
  double f_x0;
  double residual;
} MinvecTraceRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error of this thread into `buf` (NUL-terminated, truncated
// to `len`) and returns the full message length in bytes without the NUL.
//
// # Safety
// `buf` must be valid for `len` writes, or null when `len == 0`.
size_t minvec_last_error_message(char *buf, size_t len);

// Builds an `n × n` operator from row-major `data`.
//
// # Safety
// `data` must be valid for `rows * cols` reads; `out` must be writable.
enum MinvecStatus minvec_operator_from_dense(const double *data,
                                             size_t rows,
                                             size_t cols,
                                             enum MinvecNorm norm,
                                             struct MinvecOperator **out);

// Discretized Volterra operator on `n` cells.
//
// # Safety
// `out` must be writable.
enum MinvecStatus minvec_operator_volterra(size_t n,
                                           enum MinvecNorm norm,
                                           struct MinvecOperator **out);

// Subdiagonal shift plus `eta` on the diagonal.
//
// # Safety
// `out` must be writable.
enum MinvecStatus minvec_operator_jordan_shift(size_t n,
                                               double eta,
                                               enum MinvecNorm norm,
                                               struct MinvecOperator **out);

// # Safety
// `op` must come from a `minvec_operator_*` constructor; `dim` must be writable.
enum MinvecStatus minvec_operator_dim(const struct MinvecOperator *op, size_t *dim);

// Operator norm of `Qⁿ` in the operator's norm.
//
// # Safety
// `op` must be a live operator; `value` must be writable.
enum MinvecStatus minvec_operator_power_norm(const struct MinvecOperator *op,
                                             size_t n,
                                             double *value);

// # Safety
// `op` must be null or come from a `minvec_operator_*` constructor, and not
// be used afterwards.
void minvec_operator_free(struct MinvecOperator *op);

// Solves `min ‖y‖` over `Qⁿy ∈ B(x₀, ε)` and certifies the result.
//
// # Safety
// `op` must be a live operator, `x0` valid for `len` reads, `out` writable.
enum MinvecStatus minvec_solve(const struct MinvecOperator *op,
                               size_t power,
                               const double *x0,
                               size_t len,
                               double epsilon,
                               struct MinvecSolution **out);

// # Safety
// `sol` must be a live solution; `out` must be writable.
enum MinvecStatus minvec_solution_summary(const struct MinvecSolution *sol,
                                          struct MinvecSolutionSummary *out);

// Copies the minimal vector `y` into `out` (`len ≥ dim`).
//
// # Safety
// `sol` must be a live solution; `out` valid for `len` writes.
enum MinvecStatus minvec_solution_vector(const struct MinvecSolution *sol, double *out, size_t len);

// Copies the coefficients of the minimal functional `f` into `out`.
//
// # Safety
// `sol` must be a live solution; `out` valid for `len` writes.
enum MinvecStatus minvec_solution_functional(const struct MinvecSolution *sol,
                                             double *out,
                                             size_t len);

// # Safety
// `sol` must be null or a solution from [`minvec_solve`], not used afterwards.
void minvec_solution_free(struct MinvecSolution *sol);

// Solves the problem for every power `1..=n_max` with exact minimizers.
//
// # Safety
// `op` must be a live operator, `x0` valid for `len` reads, `out` writable.
enum MinvecStatus minvec_trace_run(const struct MinvecOperator *op,
                                   const double *x0,
                                   size_t len,
                                   double epsilon,
                                   size_t n_max,
                                   struct MinvecTrace **out);

// # Safety
// `trace` must be a live trace; `len` must be writable.
enum MinvecStatus minvec_trace_len(const struct MinvecTrace *trace, size_t *len);

// # Safety
// `trace` must be a live trace; `out` must be writable.
enum MinvecStatus minvec_trace_row(const struct MinvecTrace *trace,
                                   size_t index,
                                   struct MinvecTraceRow *out);

// # Safety
// `trace` must be null or a trace from [`minvec_trace_run`], not used afterwards.
void minvec_trace_free(struct MinvecTrace *trace);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MINVEC_H */
