//! C ABI over `fastgmr`.
//!
//! Every function returns a [`FastgmrStatus`]; on failure a message is
//! available from [`fastgmr_last_error_message`] on the same thread. Objects
//! are opaque handles created by `*_new`/`*_from_*`/`*_read` calls and
//! released with the matching `*_free`. Dense data crosses the boundary in
//! column-major order.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use fastgmr::gmr::{self, GmrProblem};
use fastgmr::matrix::{CscMatrix, Mat, MatrixHandle};
use fastgmr::sketch::{leverage_scores, ScoreSide, SketchFamily, SketchSpec};
use fastgmr::spsd::{self, KernelOracle};
use fastgmr::svd_stream::{LowRankFactors, StreamSvdConfig, StreamSvdState, Variant};
use fastgmr::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastgmrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotSymmetric = 4,
    RankCollapse = 5,
    IterationFailure = 6,
    StreamOrder = 7,
    Io = 8,
    DegenerateInput = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastgmrSketch {
    Gaussian = 0,
    CountSketch = 1,
    /// Two nonzeros per column.
    Osnap = 2,
    Srht = 3,
    Uniform = 4,
    /// Leverage scores of `C` (rows) and `R` (columns).
    Leverage = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastgmrVariant {
    Fast = 0,
    Practical = 1,
}

/// Sizes for a single-pass SVD stream (see `StreamSvdConfig`).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FastgmrStreamConfig {
    pub k: usize,
    pub epsilon: f64,
    pub c0: usize,
    pub r0: usize,
    pub c: usize,
    pub r: usize,
    pub s_c: usize,
    pub s_r: usize,
    pub block_size: usize,
    pub seed: u64,
    pub osnap_p: usize,
}

/// Dense or sparse matrix.
pub struct FastgmrMatrix {
    inner: MatrixHandle,
}

/// Single-pass SVD accumulator state.
pub struct FastgmrStreamSvd {
    inner: StreamSvdState,
}

/// `U diag(sigma) V^T` returned by a stream.
pub struct FastgmrFactors {
    inner: LowRankFactors,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(FastgmrStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DimensionMismatch { .. } | Error::NotSquare { .. } => FastgmrStatus::DimensionMismatch,
            Error::NotSymmetric { .. } => FastgmrStatus::NotSymmetric,
            Error::RankCollapse { .. } => FastgmrStatus::RankCollapse,
            Error::IterationFailure => FastgmrStatus::IterationFailure,
            Error::OutOfOrderBlock { .. } | Error::EmptyStream => FastgmrStatus::StreamOrder,
            Error::DegenerateTail => FastgmrStatus::DegenerateInput,
            Error::Io(_)
            | Error::Csv(_)
            | Error::Parse { .. }
            | Error::Index { .. }
            | Error::UnsupportedField(_)
            | Error::Checkpoint(_) => FastgmrStatus::Io,
            _ => FastgmrStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(FastgmrStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FastgmrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            FastgmrStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            FastgmrStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(FastgmrStatus::NullPointer, format!("{what} is null")))
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(FastgmrStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure(FastgmrStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    let s = as_ref(p, "path")?;
    let s = CStr::from_ptr(s)
        .to_str()
        .map_err(|_| invalid("path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    let slot = as_mut(out, "output pointer")?;
    *slot = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), Failure> {
    if len < src.len() {
        return Err(invalid(format!("buffer holds {len} values, need {}", src.len())));
    }
    if src.is_empty() {
        return Ok(());
    }
    let dst = as_mut(buf, "buffer")?;
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

fn dense(m: &FastgmrMatrix) -> Mat {
    m.inner.to_dense()
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fastgmr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null after a
/// successful call. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn fastgmr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copies a column-major `rows x cols` array into a new dense matrix.
///
/// # Safety
/// `data` must point to `rows * cols` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastgmr_matrix_from_dense(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut FastgmrMatrix,
) -> FastgmrStatus {
    guard(|| {
        let len = rows.checked_mul(cols).ok_or_else(|| invalid("size overflow"))?;
        let values = slice(data, len, "data")?;
        let m = Mat::from_column_slice(rows, cols, values);
        put(out, FastgmrMatrix { inner: MatrixHandle::Dense(m) })
    })
}

/// Builds a compressed-sparse-column matrix (`col_ptr` has `cols + 1`
/// entries, `row_idx`/`values` have `col_ptr[cols]`).
///
/// # Safety
/// The arrays must be readable for the stated lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastgmr_matrix_from_csc(
    rows: usize,
    cols: usize,
    col_ptr: *const usize,
    row_idx: *const usize,
    values: *const f64,
    out: *mut *mut FastgmrMatrix,
) -> FastgmrStatus {
    guard(|| {
        let cp = slice(col_ptr, cols + 1, "col_ptr")?.to_vec();
        let nnz = *cp.last().unwrap_or(&0);
        let ri = slice(row_idx, nnz, "row_idx")?.to_vec();
        let vs = slice(values, nnz, "values")?.to_vec();
        let m = CscMatrix::new(rows, cols, cp, ri, vs)?;
        put(out, FastgmrMatrix { inner: MatrixHandle::Sparse(m) })
    })
}

/// Loads a Matrix Market (`.mtx`) or libsvm file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastgmr_matrix_read(path: *const c_char, out: *mut *mut FastgmrMatrix) -> FastgmrStatus {
    guard(|| {
        let (a, _) = fastgmr::bench_io::load_dataset(&path_arg(path)?)?;
        put(out, FastgmrMatrix { inner: a })
    })
}

/// Writes a matrix in Matrix Market format.
///
/// # Safety
/// `m` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fastgmr_matrix_write(m: *const FastgmrMatrix, path: *const c_char) -> FastgmrStatus {
    guard(|| {
        let m = as_ref(m, "matrix")?;
        fastgmr::bench_io::write_matrix_market(&m.inner, &path_arg(path)?)?;
        Ok(())
    })
}

/// Writes the shape of `m`.
///
/// # Safety
/// `m` must be a live handle; `rows` and `cols` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastgmr_matrix_shape(
    m: *const FastgmrMatrix,
    rows: *mut usize,
    cols: *mut usize,
) -> FastgmrStatus {
    guard(|| {
        let m = as_ref(m, "matrix")?;
        *as_mut(rows, "rows")? = m.inner.rows();
        *as_mut(cols, "cols")? = m.inner.cols();
        Ok(())
    })
}

/// Copies `m` densely (column-major) into `buf` of `len` values.
///
/// # Safety
/// `m` must be a live handle; `buf` must be writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn fastgmr_matrix_copy_dense(
    m: *const FastgmrMatrix,
    buf: *mut f64,
    len: usize,
) -> FastgmrStatus {
    guard(|| copy_out(dense(as_ref(m, "matrix")?).as_slice(), buf, len))
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fastgmr_matrix_free(m: *mut FastgmrMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

unsafe fn problem(
    a: *const FastgmrMatrix,
    c: *const FastgmrMatrix,
    r: *const FastgmrMatrix,
) -> Result<GmrProblem, Failure> {
    let a = as_ref(a, "A")?;
    let c = as_ref(c, "C")?;
    let r = as_ref(r, "R")?;
    Ok(GmrProblem::new(a.inner.clone(), dense(c), dense(r))?)
}

unsafe fn put_solution(
    sol: gmr::GmrSolution,
    out_core: *mut *mut FastgmrMatrix,
    out_residual: *mut f64,
) -> Result<(), Failure> {
    if let Some(res) = out_residual.as_mut() {
        *res = sol.residual_fro;
    }
    put(out_core, FastgmrMatrix { inner: MatrixHandle::Dense(sol.core) })
}

/// Optimal core `C^+ A R^+`. `out_residual` may be null.
///
/// # Safety
/// Handles must be live; `out_core` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastgmr_gmr_solve_exact(
    a: *const FastgmrMatrix,
    c: *const FastgmrMatrix,
    r: *const FastgmrMatrix,
    out_core: *mut *mut FastgmrMatrix,
    out_residual: *mut f64,
) -> FastgmrStatus {
    guard(|| {
        let p = problem(a, c, r)?;
        put_solution(gmr::solve_exact(&p)?, out_core, out_residual)
    })
}

/// Sketched core `(S_C C)^+ (S_C A S_R^T) (R S_R^T)^+` with `S_C` of size
/// `s_c x m` and `S_R` of size `s_r x n`. `out_residual` may be null.
///
/// # Safety
/// Handles must be live; `out_core` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastgmr_gmr_solve_fast(
    a: *const FastgmrMatrix,
    c: *const FastgmrMatrix,
    r: *const FastgmrMatrix,
    family: FastgmrSketch,
    s_c: usize,
    s_r: usize,
    seed: u64,
    out_core: *mut *mut FastgmrMatrix,
    out_residual: *mut f64,
) -> FastgmrStatus {
    guard(|| {
        let p = problem(a, c, r)?;
        let (m, n) = (p.a.rows(), p.a.cols());
        let family_for = |side: ScoreSide, x: &Mat| -> Result<SketchFamily, Failure> {
            Ok(match family {
                FastgmrSketch::Gaussian => SketchFamily::Gaussian,
                FastgmrSketch::CountSketch => SketchFamily::CountSketch,
                FastgmrSketch::Osnap => SketchFamily::Osnap { nnz_per_col: 2 },
                FastgmrSketch::Srht => SketchFamily::Srht,
                FastgmrSketch::Uniform => SketchFamily::UniformSample,
                FastgmrSketch::Leverage => SketchFamily::LeverageSample(leverage_scores(x, side)?.scores),
            })
        };
        let sc = SketchSpec::new(family_for(ScoreSide::Row, &p.c)?, s_c, m, fastgmr::rng::derive_seed(seed, 1));
        let sr = SketchSpec::new(family_for(ScoreSide::Column, &p.r)?, s_r, n, fastgmr::rng::derive_seed(seed, 2));
        put_solution(gmr::solve_fast(&p, &sc, &sr)?, out_core, out_residual)
    })
}

/// Query-frugal SPSD approximation `K ~ C X C^T` of the RBF kernel
/// `exp(-sigma ||x_i - x_j||^2)` over the columns of `points` (`d x n`).
/// `out_queries` may be null.
///
/// # Safety
/// `points` must be live; `out_c` and `out_core` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastgmr_spsd_rbf(
    points: *const FastgmrMatrix,
    sigma: f64,
    c: usize,
    s: usize,
    seed: u64,
    out_c: *mut *mut FastgmrMatrix,
    out_core: *mut *mut FastgmrMatrix,
    out_queries: *mut usize,
) -> FastgmrStatus {
    guard(|| {
        let pts = dense(as_ref(points, "points")?);
        let mut oracle = KernelOracle::new(pts, sigma)?;
        let approx = spsd::approximate(&mut oracle, c, s, seed)?;
        if let Some(q) = out_queries.as_mut() {
            *q = approx.queries_used;
        }
        as_mut(out_core, "out_core")?;
        put(out_c, FastgmrMatrix { inner: MatrixHandle::Dense(approx.c) })?;
        put(out_core, FastgmrMatrix { inner: MatrixHandle::Dense(approx.core) })
    })
}

/// Suggested sizes for target rank `k` and accuracy `epsilon`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastgmr_stream_config_suggested(
    k: usize,
    epsilon: f64,
    seed: u64,
    out: *mut FastgmrStreamConfig,
) -> FastgmrStatus {
    guard(|| {
        let c = StreamSvdConfig::suggested(k, epsilon, seed);
        *as_mut(out, "config")? = FastgmrStreamConfig {
            k: c.k,
            epsilon: c.epsilon,
            c0: c.c0,
            r0: c.r0,
            c: c.c,
            r: c.r,
            s_c: c.s_c,
            s_r: c.s_r,
            block_size: c.block_size,
            seed: c.seed,
            osnap_p: c.osnap_p,
        };
        Ok(())
    })
}

/// Starts a single-pass SVD over an `m x n` column stream.
///
/// # Safety
/// `config` must be readable; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastgmr_stream_svd_new(
    config: *const FastgmrStreamConfig,
    m: usize,
    n: usize,
    variant: FastgmrVariant,
    out: *mut *mut FastgmrStreamSvd,
) -> FastgmrStatus {
    guard(|| {
        let c = *as_ref(config, "config")?;
        let cfg = StreamSvdConfig {
            k: c.k,
            epsilon: c.epsilon,
            c0: c.c0,
            r0: c.r0,
            c: c.c,
            r: c.r,
            s_c: c.s_c,
            s_r: c.s_r,
            block_size: c.block_size,
            seed: c.seed,
            osnap_p: c.osnap_p,
        };
        let variant = match variant {
            FastgmrVariant::Fast => Variant::Fast,
            FastgmrVariant::Practical => Variant::Practical,
        };
        let st = StreamSvdState::with_variant(cfg, m, n, variant)?;
        put(out, FastgmrStreamSvd { inner: st })
    })
}

/// Folds columns `[col_offset, col_offset + cols(block))` into the state.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn fastgmr_stream_svd_ingest(
    state: *mut FastgmrStreamSvd,
    block: *const FastgmrMatrix,
    col_offset: usize,
) -> FastgmrStatus {
    guard(|| {
        let st = as_mut(state, "state")?;
        let blk = as_ref(block, "block")?;
        st.inner.ingest_block(&blk.inner, col_offset)?;
        Ok(())
    })
}

/// # Safety
/// `state` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastgmr_stream_svd_columns_seen(
    state: *const FastgmrStreamSvd,
    out: *mut usize,
) -> FastgmrStatus {
    guard(|| {
        *as_mut(out, "out")? = as_ref(state, "state")?.inner.columns_seen();
        Ok(())
    })
}

/// Computes the factors from the current state (the state stays usable).
///
/// # Safety
/// `state` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastgmr_stream_svd_finalize(
    state: *const FastgmrStreamSvd,
    out: *mut *mut FastgmrFactors,
) -> FastgmrStatus {
    guard(|| {
        let f = as_ref(state, "state")?.inner.finalize()?;
        put(out, FastgmrFactors { inner: f })
    })
}

/// Writes a checksummed checkpoint of the state.
///
/// # Safety
/// `state` must be live and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fastgmr_stream_svd_save(
    state: *const FastgmrStreamSvd,
    path: *const c_char,
) -> FastgmrStatus {
    guard(|| {
        as_ref(state, "state")?.inner.save(&path_arg(path)?)?;
        Ok(())
    })
}

/// Restores a state written by [`fastgmr_stream_svd_save`].
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastgmr_stream_svd_load(
    path: *const c_char,
    out: *mut *mut FastgmrStreamSvd,
) -> FastgmrStatus {
    guard(|| {
        let st = StreamSvdState::load(&path_arg(path)?)?;
        put(out, FastgmrStreamSvd { inner: st })
    })
}

/// # Safety
/// `state` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fastgmr_stream_svd_free(state: *mut FastgmrStreamSvd) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Shape of the factors: `U` is `m x q`, `V` is `n x q`.
///
/// # Safety
/// `f` must be live; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastgmr_factors_shape(
    f: *const FastgmrFactors,
    m: *mut usize,
    n: *mut usize,
    q: *mut usize,
) -> FastgmrStatus {
    guard(|| {
        let f = &as_ref(f, "factors")?.inner;
        *as_mut(m, "m")? = f.u.nrows();
        *as_mut(n, "n")? = f.v.nrows();
        *as_mut(q, "q")? = f.sigma.len();
        Ok(())
    })
}

/// Copies `U` (column-major, `m * q` values).
///
/// # Safety
/// `f` must be live; `buf` must be writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn fastgmr_factors_copy_u(f: *const FastgmrFactors, buf: *mut f64, len: usize) -> FastgmrStatus {
    guard(|| copy_out(as_ref(f, "factors")?.inner.u.as_slice(), buf, len))
}

/// Copies the `q` singular values, nonincreasing.
///
/// # Safety
/// `f` must be live; `buf` must be writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn fastgmr_factors_copy_sigma(
    f: *const FastgmrFactors,
    buf: *mut f64,
    len: usize,
) -> FastgmrStatus {
    guard(|| copy_out(&as_ref(f, "factors")?.inner.sigma, buf, len))
}

/// Copies `V` (column-major, `n * q` values).
///
/// # Safety
/// `f` must be live; `buf` must be writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn fastgmr_factors_copy_v(f: *const FastgmrFactors, buf: *mut f64, len: usize) -> FastgmrStatus {
    guard(|| copy_out(as_ref(f, "factors")?.inner.v.as_slice(), buf, len))
}

/// # Safety
/// `f` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fastgmr_factors_free(f: *mut FastgmrFactors) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}
