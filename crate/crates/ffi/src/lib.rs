//! C ABI over the `sparsephase` library.
//!
//! Objects cross the boundary as opaque handles created by `sp_*_new` /
//! `sp_*_read` style constructors and released with the matching `_free`.
//! Every fallible function returns an [`SpStatus`]; on failure a message is
//! available from [`sp_last_error_message`] on the same thread until the
//! next failing call. Panics are caught and reported as
//! [`SpStatus::Internal`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sparsephase::ensembles::{sample_matrix, Suite};
use sparsephase::experiment::{parse_records, read_records, run_slice, write_records, TrialRecord};
use sparsephase::inference::{z_score, ZMethod};
use sparsephase::lp::{solve_l1, solve_nonneg, LpStatus};
use sparsephase::oracle::{exact_spark, face_count, survival_fraction, PolytopeKind};
use sparsephase::phase::{estimate_ld50, estimate_width, slices_from_records};
use sparsephase::{DenseMatrix, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Singular = 4,
    IterationLimit = 5,
    Parse = 6,
    Io = 7,
    NoTransition = 8,
    TooLarge = 9,
    Numerical = 10,
    BufferTooSmall = 11,
    Internal = 12,
}

/// Outcome of a linear program.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpLpStatus {
    Optimal = 0,
    Infeasible = 1,
    Unbounded = 2,
}

/// Polytope whose faces are counted or tested.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpPolytope {
    Simplex = 0,
    CrossPolytope = 1,
}

/// One aggregated Monte Carlo cell.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SpRecord {
    pub suite: u32,
    pub big_n: u64,
    pub n: u64,
    pub k: u64,
    pub trials: u64,
    pub successes: u64,
}

/// Opaque dense matrix.
pub struct SpMatrix(DenseMatrix);

/// Opaque list of trial records.
pub struct SpRecords(Vec<TrialRecord>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SpStatus {
    match err {
        Error::DimensionMismatch(_) | Error::InvalidShape(_) => SpStatus::DimensionMismatch,
        Error::SingularMatrix | Error::DegenerateDesign(_) => SpStatus::Singular,
        Error::IterationLimit(_) | Error::NoConvergence(_) => SpStatus::IterationLimit,
        Error::Parse { .. } => SpStatus::Parse,
        Error::Io(_) => SpStatus::Io,
        Error::NoTransition(_) | Error::NoCrossing(_) => SpStatus::NoTransition,
        Error::TooLarge { .. } | Error::Overflow(_) => SpStatus::TooLarge,
        Error::NumericalBreakdown(_) | Error::Separation | Error::AllColumnsFailed => SpStatus::Numerical,
        _ => SpStatus::InvalidArgument,
    }
}

fn fail(status: SpStatus, msg: impl Into<String>) -> SpStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, mapping library errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), SpStatus>) -> SpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(SpStatus::Internal, "internal panic"),
    }
}

trait IntoStatus<T> {
    fn st(self) -> Result<T, SpStatus>;
}

impl<T> IntoStatus<T> for sparsephase::Result<T> {
    fn st(self) -> Result<T, SpStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), SpStatus> {
    if p.is_null() {
        Err(fail(SpStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, SpStatus> {
    non_null(p, "path")?;
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| fail(SpStatus::InvalidArgument, "path is not valid UTF-8"))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies a row-major `rows × cols` array into a new matrix.
///
/// # Safety
/// `data` must point to `rows * cols` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_matrix_new(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut SpMatrix,
) -> SpStatus {
    guard(|| {
        non_null(data, "data")?;
        non_null(out, "out")?;
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| fail(SpStatus::InvalidArgument, "rows * cols overflows"))?;
        let values = std::slice::from_raw_parts(data, len).to_vec();
        let m = DenseMatrix::from_row_major(rows, cols, values).st()?;
        *out = Box::into_raw(Box::new(SpMatrix(m)));
        Ok(())
    })
}

/// Samples an `n × big_n` matrix from the ensemble of a suite code.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_matrix_sample(
    suite: u32,
    n: usize,
    big_n: usize,
    seed: u64,
    out: *mut *mut SpMatrix,
) -> SpStatus {
    guard(|| {
        non_null(out, "out")?;
        let s = Suite::from_id(suite).st()?;
        let m = sample_matrix(&s.ensemble, n, big_n, seed).st()?;
        *out = Box::into_raw(Box::new(SpMatrix(m)));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sp_matrix_free(m: *mut SpMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sp_matrix_rows(m: *const SpMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.rows())
}

/// # Safety
/// `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sp_matrix_cols(m: *const SpMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.cols())
}

/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sp_matrix_get(m: *const SpMatrix, i: usize, j: usize, out: *mut f64) -> SpStatus {
    guard(|| {
        non_null(m, "matrix")?;
        non_null(out, "out")?;
        let m = &(*m).0;
        if i >= m.rows() || j >= m.cols() {
            return Err(fail(SpStatus::InvalidArgument, format!("index ({i}, {j}) out of range")));
        }
        *out = m[(i, j)];
        Ok(())
    })
}

unsafe fn solve_with(
    solver: fn(&DenseMatrix, &[f64]) -> sparsephase::Result<sparsephase::lp::LpSolution>,
    a: *const SpMatrix,
    y: *const f64,
    y_len: usize,
    x: *mut f64,
    x_len: usize,
    status: *mut SpLpStatus,
) -> SpStatus {
    guard(|| {
        non_null(a, "matrix")?;
        non_null(y, "y")?;
        non_null(x, "x")?;
        non_null(status, "status")?;
        let a = &(*a).0;
        if x_len < a.cols() {
            return Err(fail(
                SpStatus::BufferTooSmall,
                format!("x holds {x_len} values, {} needed", a.cols()),
            ));
        }
        let y = std::slice::from_raw_parts(y, y_len);
        let sol = solver(a, y).st()?;
        *status = match sol.status {
            LpStatus::Optimal => SpLpStatus::Optimal,
            LpStatus::Infeasible => SpLpStatus::Infeasible,
            LpStatus::Unbounded => SpLpStatus::Unbounded,
        };
        std::slice::from_raw_parts_mut(x, a.cols()).copy_from_slice(&sol.x);
        Ok(())
    })
}

/// Minimum ℓ1-norm solution of `A x = y`; writes `cols(A)` values to `x`.
///
/// # Safety
/// `y` must hold `y_len` doubles, `x` must hold `x_len` doubles, `status`
/// must be writable and `a` live.
#[no_mangle]
pub unsafe extern "C" fn sp_solve_l1(
    a: *const SpMatrix,
    y: *const f64,
    y_len: usize,
    x: *mut f64,
    x_len: usize,
    status: *mut SpLpStatus,
) -> SpStatus {
    solve_with(solve_l1, a, y, y_len, x, x_len, status)
}

/// Minimum-sum nonnegative solution of `A x = y`.
///
/// # Safety
/// As for [`sp_solve_l1`].
#[no_mangle]
pub unsafe extern "C" fn sp_solve_nonneg(
    a: *const SpMatrix,
    y: *const f64,
    y_len: usize,
    x: *mut f64,
    x_len: usize,
    status: *mut SpLpStatus,
) -> SpStatus {
    solve_with(solve_nonneg, a, y, y_len, x, x_len, status)
}

fn kind_of(p: SpPolytope) -> PolytopeKind {
    match p {
        SpPolytope::Simplex => PolytopeKind::Simplex,
        SpPolytope::CrossPolytope => PolytopeKind::CrossPolytope,
    }
}

fn narrow(v: u128, what: &str) -> Result<u64, SpStatus> {
    u64::try_from(v).map_err(|_| fail(SpStatus::TooLarge, format!("{what} exceeds 64 bits")))
}

/// Number of k-faces of the polytope in dimension `big_n`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_face_count(kind: SpPolytope, big_n: usize, k: usize, out: *mut u64) -> SpStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = narrow(face_count(kind_of(kind), big_n, k).st()?, "face count")?;
        Ok(())
    })
}

/// Exact number of k-faces that survive projection by `a`, out of all.
///
/// # Safety
/// `a` must be live; `survived` and `total` writable.
#[no_mangle]
pub unsafe extern "C" fn sp_survival_fraction(
    a: *const SpMatrix,
    kind: SpPolytope,
    k: usize,
    budget: u64,
    survived: *mut u64,
    total: *mut u64,
) -> SpStatus {
    guard(|| {
        non_null(a, "matrix")?;
        non_null(survived, "survived")?;
        non_null(total, "total")?;
        let f = survival_fraction(&(*a).0, kind_of(kind), k, budget as u128).st()?;
        *survived = narrow(f.survived, "survivor count")?;
        *total = narrow(f.total, "face count")?;
        Ok(())
    })
}

/// Smallest number of dependent columns; 0 when all columns are
/// independent.
///
/// # Safety
/// `a` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sp_exact_spark(a: *const SpMatrix, budget: u64, out: *mut usize) -> SpStatus {
    guard(|| {
        non_null(a, "matrix")?;
        non_null(out, "out")?;
        *out = exact_spark(&(*a).0, budget as u128).st()?.unwrap_or(0);
        Ok(())
    })
}

/// Two-sample z-score; `defined` is set to 0 when the pooled variance is 0.
///
/// # Safety
/// `z` and `defined` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_z_score(
    s0: u64,
    m0: u64,
    s1: u64,
    m1: u64,
    pooled: bool,
    z: *mut f64,
    defined: *mut bool,
) -> SpStatus {
    guard(|| {
        non_null(z, "z")?;
        non_null(defined, "defined")?;
        let method = if pooled { ZMethod::Pooled } else { ZMethod::Unpooled };
        let v = z_score(s0, m0, s1, m1, method).st()?;
        *defined = v.is_some();
        *z = v.unwrap_or(0.0);
        Ok(())
    })
}

/// Reads an `E N n k M S` record file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sp_records_read(path: *const c_char, out: *mut *mut SpRecords) -> SpStatus {
    guard(|| {
        non_null(out, "out")?;
        let r = read_records(path_arg(path)?).st()?;
        *out = Box::into_raw(Box::new(SpRecords(r)));
        Ok(())
    })
}

/// Parses record text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sp_records_parse(text: *const c_char, out: *mut *mut SpRecords) -> SpStatus {
    guard(|| {
        non_null(text, "text")?;
        non_null(out, "out")?;
        let s = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| fail(SpStatus::Parse, "text is not valid UTF-8"))?;
        let r = parse_records(s, None).st()?;
        *out = Box::into_raw(Box::new(SpRecords(r)));
        Ok(())
    })
}

/// Locates the transition of one slice and runs `trials` replicates per
/// grid point (`workers` = 0 uses every core).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_run_slice(
    suite: u32,
    big_n: usize,
    n: usize,
    trials: u64,
    pilot_trials: u64,
    seed: u64,
    workers: usize,
    out: *mut *mut SpRecords,
) -> SpStatus {
    guard(|| {
        non_null(out, "out")?;
        let s = Suite::from_id(suite).st()?;
        let run = run_slice(&s, big_n, n, trials, pilot_trials, seed, workers).st()?;
        *out = Box::into_raw(Box::new(SpRecords(run.records)));
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sp_records_free(r: *mut SpRecords) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sp_records_len(r: *const SpRecords) -> usize {
    r.as_ref().map_or(0, |r| r.0.len())
}

/// # Safety
/// `r` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sp_records_get(r: *const SpRecords, index: usize, out: *mut SpRecord) -> SpStatus {
    guard(|| {
        non_null(r, "records")?;
        non_null(out, "out")?;
        let records = &(*r).0;
        let rec = records
            .get(index)
            .ok_or_else(|| fail(SpStatus::InvalidArgument, format!("record {index} out of range")))?;
        *out = SpRecord {
            suite: rec.suite,
            big_n: rec.big_n as u64,
            n: rec.n as u64,
            k: rec.k as u64,
            trials: rec.trials,
            successes: rec.successes,
        };
        Ok(())
    })
}

/// # Safety
/// `r` must be live and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sp_records_write(r: *const SpRecords, path: *const c_char) -> SpStatus {
    guard(|| {
        non_null(r, "records")?;
        write_records(path_arg(path)?, &(*r).0).st()
    })
}

unsafe fn slice_stat(
    r: *const SpRecords,
    suite: u32,
    big_n: usize,
    n: usize,
    out: *mut f64,
    stat: fn(&sparsephase::phase::PhaseSlice) -> sparsephase::Result<f64>,
) -> SpStatus {
    guard(|| {
        non_null(r, "records")?;
        non_null(out, "out")?;
        let slices = slices_from_records(&(*r).0).st()?;
        let slice = slices
            .iter()
            .find(|s| s.suite == suite && s.big_n == big_n && s.n == n)
            .ok_or_else(|| {
                fail(
                    SpStatus::InvalidArgument,
                    format!("no slice for suite {suite}, N = {big_n}, n = {n}"),
                )
            })?;
        *out = stat(slice).st()?;
        Ok(())
    })
}

/// LD50 of the `(suite, N, n)` slice.
///
/// # Safety
/// `r` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sp_records_ld50(
    r: *const SpRecords,
    suite: u32,
    big_n: usize,
    n: usize,
    out: *mut f64,
) -> SpStatus {
    slice_stat(r, suite, big_n, n, out, estimate_ld50)
}

/// Normalized transition width of the `(suite, N, n)` slice.
///
/// # Safety
/// `r` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sp_records_width(
    r: *const SpRecords,
    suite: u32,
    big_n: usize,
    n: usize,
    out: *mut f64,
) -> SpStatus {
    slice_stat(r, suite, big_n, n, out, estimate_width)
}
