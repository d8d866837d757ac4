//! C ABI over the `minvec` library.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `minvec_*_new`-style constructor and released by the matching `_free`.
//! Functions return a [`MinvecStatus`]; on failure the message is available
//! through [`minvec_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use minvec::iteration::{run_trace, IterationTrace, TraceConfig};
use minvec::{gallery, Error, MinimalProblem, MinimalSolution, NormKind, OperatorHandle};
use nalgebra::{DMatrix, DVector};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinvecStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotInjective = 4,
    SolverFailure = 5,
    CertificateFailure = 6,
    BufferTooSmall = 7,
    OutOfRange = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinvecNorm {
    L1 = 0,
    L2 = 1,
    Linf = 2,
}

impl From<MinvecNorm> for NormKind {
    fn from(n: MinvecNorm) -> Self {
        match n {
            MinvecNorm::L1 => NormKind::L1,
            MinvecNorm::L2 => NormKind::L2,
            MinvecNorm::Linf => NormKind::Linf,
        }
    }
}

/// Square operator with its norm kind.
pub struct MinvecOperator(OperatorHandle);

/// Minimal vector, minimal functional and their scalars at one power.
pub struct MinvecSolution(MinimalSolution);

/// Per-power records for `n = 1..N`.
pub struct MinvecTrace(IterationTrace);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MinvecSolutionSummary {
    pub power: usize,
    pub dim: usize,
    /// `d = ‖y‖`.
    pub d: f64,
    /// `c = f(Qⁿy)`.
    pub c: f64,
    /// `‖Q*ⁿf‖`.
    pub adjoint_norm: f64,
    /// `‖x₀ − Qⁿy‖`.
    pub residual_norm: f64,
    pub eq1_slack: f64,
    pub lambda: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MinvecTraceRow {
    pub n: usize,
    pub d: f64,
    pub norm_y: f64,
    /// `‖yₙ‖/‖yₙ₋₁‖`; NaN for the first row.
    pub ratio: f64,
    pub eq1_slack: f64,
    pub f_x0: f64,
    pub residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> MinvecStatus {
    match err {
        Error::Dimension { .. } => MinvecStatus::DimensionMismatch,
        Error::NotInjective { .. } => MinvecStatus::NotInjective,
        Error::Certificate { .. } => MinvecStatus::CertificateFailure,
        Error::Input(_) | Error::InvalidProblem(_) | Error::Degenerate(_) => MinvecStatus::InvalidArgument,
        Error::Trace { source, .. } => status_of(source),
        _ => MinvecStatus::SolverFailure,
    }
}

fn guard(body: impl FnOnce() -> Result<(), MinvecStatus>) -> MinvecStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => MinvecStatus::Ok,
        Ok(Err(s)) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            MinvecStatus::Panic
        }
    }
}

fn lift<T>(r: minvec::Result<T>) -> Result<T, MinvecStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), MinvecStatus> {
    if p.is_null() {
        set_error(format!("`{what}` is null"));
        return Err(MinvecStatus::NullPointer);
    }
    Ok(())
}

/// # Safety
/// `data` must be valid for `len` reads, or null when `len == 0`.
unsafe fn slice<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], MinvecStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(data, what)?;
    Ok(std::slice::from_raw_parts(data, len))
}

fn emit<T>(out: *mut *mut T, value: T) {
    // SAFETY: callers check `out` for null first.
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

/// # Safety
/// `out` must be valid for `len` writes.
unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), MinvecStatus> {
    if len < src.len() {
        set_error(format!("buffer holds {len} values, {} needed", src.len()));
        return Err(MinvecStatus::BufferTooSmall);
    }
    if !src.is_empty() {
        non_null(out, "out")?;
        ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    }
    Ok(())
}

/// Copies the last error of this thread into `buf` (NUL-terminated, truncated
/// to `len`) and returns the full message length in bytes without the NUL.
///
/// # Safety
/// `buf` must be valid for `len` writes, or null when `len == 0`.
#[no_mangle]
pub unsafe extern "C" fn minvec_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let k = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, k);
            *buf.add(k) = 0;
        }
        bytes.len()
    })
}

/// Builds an `n × n` operator from row-major `data`.
///
/// # Safety
/// `data` must be valid for `rows * cols` reads; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn minvec_operator_from_dense(
    data: *const f64,
    rows: usize,
    cols: usize,
    norm: MinvecNorm,
    out: *mut *mut MinvecOperator,
) -> MinvecStatus {
    guard(|| {
        non_null(out, "out")?;
        if rows == 0 || rows != cols {
            set_error(format!("operator must be square and non-empty, got {rows}x{cols}"));
            return Err(MinvecStatus::InvalidArgument);
        }
        let len = rows.checked_mul(cols).ok_or_else(|| {
            set_error("matrix size overflows");
            MinvecStatus::InvalidArgument
        })?;
        let vals = slice(data, len, "data")?;
        let m = DMatrix::from_row_slice(rows, cols, vals);
        emit(out, MinvecOperator(lift(OperatorHandle::new(m, norm.into()))?));
        Ok(())
    })
}

/// Discretized Volterra operator on `n` cells.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn minvec_operator_volterra(n: usize, norm: MinvecNorm, out: *mut *mut MinvecOperator) -> MinvecStatus {
    guard(|| {
        non_null(out, "out")?;
        emit(out, MinvecOperator(lift(gallery::volterra(n, norm.into()))?));
        Ok(())
    })
}

/// Subdiagonal shift plus `eta` on the diagonal.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn minvec_operator_jordan_shift(
    n: usize,
    eta: f64,
    norm: MinvecNorm,
    out: *mut *mut MinvecOperator,
) -> MinvecStatus {
    guard(|| {
        non_null(out, "out")?;
        emit(out, MinvecOperator(lift(gallery::jordan_shift(n, eta, norm.into()))?));
        Ok(())
    })
}

/// # Safety
/// `op` must come from a `minvec_operator_*` constructor; `dim` must be writable.
#[no_mangle]
pub unsafe extern "C" fn minvec_operator_dim(op: *const MinvecOperator, dim: *mut usize) -> MinvecStatus {
    guard(|| {
        non_null(op, "op")?;
        non_null(dim, "dim")?;
        *dim = (*op).0.dim();
        Ok(())
    })
}

/// Operator norm of `Qⁿ` in the operator's norm.
///
/// # Safety
/// `op` must be a live operator; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn minvec_operator_power_norm(op: *const MinvecOperator, n: usize, value: *mut f64) -> MinvecStatus {
    guard(|| {
        non_null(op, "op")?;
        non_null(value, "value")?;
        *value = lift((*op).0.power_norm(n))?;
        Ok(())
    })
}

/// # Safety
/// `op` must be null or come from a `minvec_operator_*` constructor, and not
/// be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn minvec_operator_free(op: *mut MinvecOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Solves `min ‖y‖` over `Qⁿy ∈ B(x₀, ε)` and certifies the result.
///
/// # Safety
/// `op` must be a live operator, `x0` valid for `len` reads, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn minvec_solve(
    op: *const MinvecOperator,
    power: usize,
    x0: *const f64,
    len: usize,
    epsilon: f64,
    out: *mut *mut MinvecSolution,
) -> MinvecStatus {
    guard(|| {
        non_null(op, "op")?;
        non_null(out, "out")?;
        let x = DVector::from_column_slice(slice(x0, len, "x0")?);
        let problem = lift(MinimalProblem::new(&(*op).0, power, x, epsilon))?;
        emit(out, MinvecSolution(lift(minvec::solve(&problem))?));
        Ok(())
    })
}

/// # Safety
/// `sol` must be a live solution; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn minvec_solution_summary(sol: *const MinvecSolution, out: *mut MinvecSolutionSummary) -> MinvecStatus {
    guard(|| {
        non_null(sol, "sol")?;
        non_null(out, "out")?;
        let s = &(*sol).0;
        *out = MinvecSolutionSummary {
            power: s.power,
            dim: s.y.len(),
            d: s.d,
            c: s.c,
            adjoint_norm: s.adjoint_norm,
            residual_norm: s.residual_norm,
            eq1_slack: s.eq1_slack,
            lambda: s.lambda,
        };
        Ok(())
    })
}

/// Copies the minimal vector `y` into `out` (`len ≥ dim`).
///
/// # Safety
/// `sol` must be a live solution; `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn minvec_solution_vector(sol: *const MinvecSolution, out: *mut f64, len: usize) -> MinvecStatus {
    guard(|| {
        non_null(sol, "sol")?;
        copy_out((*sol).0.y.as_slice(), out, len)
    })
}

/// Copies the coefficients of the minimal functional `f` into `out`.
///
/// # Safety
/// `sol` must be a live solution; `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn minvec_solution_functional(sol: *const MinvecSolution, out: *mut f64, len: usize) -> MinvecStatus {
    guard(|| {
        non_null(sol, "sol")?;
        copy_out((*sol).0.f.coefficients().as_slice(), out, len)
    })
}

/// # Safety
/// `sol` must be null or a solution from [`minvec_solve`], not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn minvec_solution_free(sol: *mut MinvecSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Solves the problem for every power `1..=n_max` with exact minimizers.
///
/// # Safety
/// `op` must be a live operator, `x0` valid for `len` reads, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn minvec_trace_run(
    op: *const MinvecOperator,
    x0: *const f64,
    len: usize,
    epsilon: f64,
    n_max: usize,
    out: *mut *mut MinvecTrace,
) -> MinvecStatus {
    guard(|| {
        non_null(op, "op")?;
        non_null(out, "out")?;
        let x = DVector::from_column_slice(slice(x0, len, "x0")?);
        let trace = lift(run_trace(&(*op).0, &x, epsilon, &TraceConfig::new(n_max)))?;
        emit(out, MinvecTrace(trace));
        Ok(())
    })
}

/// # Safety
/// `trace` must be a live trace; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn minvec_trace_len(trace: *const MinvecTrace, len: *mut usize) -> MinvecStatus {
    guard(|| {
        non_null(trace, "trace")?;
        non_null(len, "len")?;
        *len = (*trace).0.records.len();
        Ok(())
    })
}

/// # Safety
/// `trace` must be a live trace; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn minvec_trace_row(trace: *const MinvecTrace, index: usize, out: *mut MinvecTraceRow) -> MinvecStatus {
    guard(|| {
        non_null(trace, "trace")?;
        non_null(out, "out")?;
        let records = &(*trace).0.records;
        let r = records.get(index).ok_or_else(|| {
            set_error(format!("row {index} out of range for a trace of {} rows", records.len()));
            MinvecStatus::OutOfRange
        })?;
        *out = MinvecTraceRow {
            n: r.n,
            d: r.d,
            norm_y: r.norm_y,
            ratio: r.ratio.unwrap_or(f64::NAN),
            eq1_slack: r.eq1_slack,
            f_x0: r.f_x0,
            residual: r.residual,
        };
        Ok(())
    })
}

/// # Safety
/// `trace` must be null or a trace from [`minvec_trace_run`], not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn minvec_trace_free(trace: *mut MinvecTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}
