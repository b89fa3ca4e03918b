//! C ABI for the slra toolkit.
//!
//! Conventions: every fallible call returns an [`SlraStatus`]; out-parameters
//! are written only on `SLRA_OK`. Matrices travel as opaque handles created
//! and released by this library. The most recent error message of the calling
//! thread is available through [`slra_last_error_message`]. Panics are caught
//! at the boundary and surface as `SLRA_ERR_PANIC`.

use slra::cost::CostModelParams;
use slra::error::Error;
use slra::mat::DenseMatrix;
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlraStatus {
    SlraOk = 0,
    SlraErrInvalidArgument = 1,
    SlraErrContract = 2,
    SlraErrNumeric = 3,
    SlraErrIo = 4,
    SlraErrPanic = 5,
}

/// Opaque dense matrix handle.
pub struct SlraMatrix {
    inner: DenseMatrix,
}

/// Which branch produced a low-rank factor.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlraBranch {
    SlraBranchW1 = 1,
    SlraBranchW2 = 2,
    SlraBranchExactFallback = 3,
    SlraBranchLazySvd = 4,
}

/// Extra outputs of the dual block-size solver.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SlraLraInfo {
    pub branch: SlraBranch,
    pub sigma_hat_k: f64,
    pub sigma_hat_bk: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut buf = e.borrow_mut();
        buf.clear();
        buf.extend_from_slice(msg.as_bytes());
        buf.push(0);
    });
}

fn status_of(err: &Error) -> SlraStatus {
    match err {
        Error::InvalidArgument(_) => SlraStatus::SlraErrInvalidArgument,
        Error::IllConditionedBasis(_)
        | Error::ContractViolation(_)
        | Error::DegenerateDeflation(_)
        | Error::UndefinedCrossover => SlraStatus::SlraErrContract,
        Error::NumericFailure(_) => SlraStatus::SlraErrNumeric,
        Error::Io(_) | Error::Parse(_) => SlraStatus::SlraErrIo,
    }
}

fn guard(f: impl FnOnce() -> SlraStatus) -> SlraStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("panic crossed the ffi boundary");
            SlraStatus::SlraErrPanic
        }
    }
}

fn fail(err: Error) -> SlraStatus {
    set_error(&err.to_string());
    status_of(&err)
}

/// Copies the calling thread's last error message (NUL-terminated) into
/// `buf`, truncating to `len` bytes. Returns the full message length
/// including the terminator, or 0 when no error has been recorded.
///
/// # Safety
/// `buf` must point to `len` writable bytes, or be null (query mode).
#[no_mangle]
pub unsafe extern "C" fn slra_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if msg.is_empty() {
            return 0;
        }
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len);
            std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            // Always leave a terminator inside the written range.
            *buf.add(n - 1) = 0;
        }
        msg.len()
    })
}

unsafe fn matrix_ref<'a>(m: *const SlraMatrix) -> Option<&'a DenseMatrix> {
    m.as_ref().map(|h| &h.inner)
}

unsafe fn write_handle(out: *mut *mut SlraMatrix, m: DenseMatrix) -> SlraStatus {
    if out.is_null() {
        set_error("output handle pointer is null");
        return SlraStatus::SlraErrInvalidArgument;
    }
    *out = Box::into_raw(Box::new(SlraMatrix { inner: m }));
    SlraStatus::SlraOk
}

unsafe fn cstr_path<'a>(path: *const c_char) -> Result<&'a Path, SlraStatus> {
    if path.is_null() {
        set_error("path pointer is null");
        return Err(SlraStatus::SlraErrInvalidArgument);
    }
    match CStr::from_ptr(path).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => {
            set_error("path is not valid utf-8");
            Err(SlraStatus::SlraErrInvalidArgument)
        }
    }
}

/// Creates a matrix from row-major data (`rows * cols` doubles).
///
/// # Safety
/// `data` must point to `rows * cols` readable doubles; `out` must be a
/// valid location for one pointer.
#[no_mangle]
pub unsafe extern "C" fn slra_matrix_create(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut SlraMatrix,
) -> SlraStatus {
    guard(|| {
        if data.is_null() {
            set_error("data pointer is null");
            return SlraStatus::SlraErrInvalidArgument;
        }
        let slice = std::slice::from_raw_parts(data, rows.saturating_mul(cols));
        match DenseMatrix::new(rows, cols, slice.to_vec()) {
            Ok(m) => write_handle(out, m),
            Err(e) => fail(e),
        }
    })
}

/// Reads a matrix file (Matrix Market or binary, auto-detected).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid pointer location.
#[no_mangle]
pub unsafe extern "C" fn slra_matrix_read(
    path: *const c_char,
    out: *mut *mut SlraMatrix,
) -> SlraStatus {
    guard(|| {
        let path = match cstr_path(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match slra::io::read_matrix(path) {
            Ok(m) => write_handle(out, m),
            Err(e) => fail(e),
        }
    })
}

/// Writes a matrix in the binary format.
///
/// # Safety
/// `m` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn slra_matrix_write_binary(
    m: *const SlraMatrix,
    path: *const c_char,
) -> SlraStatus {
    guard(|| {
        let (Some(mat), Ok(path)) = (matrix_ref(m), cstr_path(path)) else {
            set_error("null matrix handle or bad path");
            return SlraStatus::SlraErrInvalidArgument;
        };
        match slra::io::write_binary_file(path, mat) {
            Ok(()) => SlraStatus::SlraOk,
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `m` must be a live handle (null returns 0).
#[no_mangle]
pub unsafe extern "C" fn slra_matrix_rows(m: *const SlraMatrix) -> usize {
    matrix_ref(m).map_or(0, |x| x.rows())
}

/// # Safety
/// `m` must be a live handle (null returns 0).
#[no_mangle]
pub unsafe extern "C" fn slra_matrix_cols(m: *const SlraMatrix) -> usize {
    matrix_ref(m).map_or(0, |x| x.cols())
}

/// Copies the row-major contents into `out` (`len` must be at least
/// `rows * cols`).
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn slra_matrix_copy_data(
    m: *const SlraMatrix,
    out: *mut f64,
    len: usize,
) -> SlraStatus {
    guard(|| {
        let Some(mat) = matrix_ref(m) else {
            set_error("null matrix handle");
            return SlraStatus::SlraErrInvalidArgument;
        };
        let need = mat.rows() * mat.cols();
        if out.is_null() || len < need {
            set_error("output buffer too small");
            return SlraStatus::SlraErrInvalidArgument;
        }
        std::ptr::copy_nonoverlapping(mat.data().as_ptr(), out, need);
        SlraStatus::SlraOk
    })
}

/// Releases a handle. Null is a no-op.
///
/// # Safety
/// `m` must have come from this library and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn slra_matrix_free(m: *mut SlraMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Schatten-p norm (`p >= 1`; pass INFINITY for the operator norm).
///
/// # Safety
/// Valid handle and writable `out`.
#[no_mangle]
pub unsafe extern "C" fn slra_schatten_norm(
    m: *const SlraMatrix,
    p: f64,
    out: *mut f64,
) -> SlraStatus {
    guard(|| {
        let Some(mat) = matrix_ref(m) else {
            set_error("null matrix handle");
            return SlraStatus::SlraErrInvalidArgument;
        };
        match slra::norms::schatten_norm(mat, p) {
            Ok(v) => {
                if out.is_null() {
                    set_error("output pointer is null");
                    return SlraStatus::SlraErrInvalidArgument;
                }
                *out = v;
                SlraStatus::SlraOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Truncated `(p, r)` norm over the top `r` singular values.
///
/// # Safety
/// Valid handle and writable `out`.
#[no_mangle]
pub unsafe extern "C" fn slra_truncated_norm(
    m: *const SlraMatrix,
    p: f64,
    r: usize,
    out: *mut f64,
) -> SlraStatus {
    guard(|| {
        let Some(mat) = matrix_ref(m) else {
            set_error("null matrix handle");
            return SlraStatus::SlraErrInvalidArgument;
        };
        match slra::norms::truncated_norm(mat, p, r) {
            Ok(v) => {
                if out.is_null() {
                    set_error("output pointer is null");
                    return SlraStatus::SlraErrInvalidArgument;
                }
                *out = v;
                SlraStatus::SlraOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Dual block-size Schatten-p solver. On success `*w_out` holds the
/// `cols x k` factor and `info_out` (optional) the branch and the Ritz
/// estimates behind the selection.
///
/// # Safety
/// Valid handle; `w_out` a valid pointer location; `info_out` writable or
/// null.
#[no_mangle]
pub unsafe extern "C" fn slra_schatten_lra(
    a: *const SlraMatrix,
    k: usize,
    p: f64,
    eps: f64,
    seed: u64,
    omega: f64,
    alpha: f64,
    w_out: *mut *mut SlraMatrix,
    info_out: *mut SlraLraInfo,
) -> SlraStatus {
    guard(|| {
        let Some(mat) = matrix_ref(a) else {
            set_error("null matrix handle");
            return SlraStatus::SlraErrInvalidArgument;
        };
        let cost = match CostModelParams::new(omega, alpha) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        match slra::lra::schatten_lra(mat, k, p, eps, seed, &cost) {
            Ok(sol) => {
                if !info_out.is_null() {
                    *info_out = SlraLraInfo {
                        branch: match sol.branch {
                            slra::lra::Branch::W1 => SlraBranch::SlraBranchW1,
                            slra::lra::Branch::W2 => SlraBranch::SlraBranchW2,
                            slra::lra::Branch::ExactFallback => {
                                SlraBranch::SlraBranchExactFallback
                            }
                            slra::lra::Branch::LazySvd => SlraBranch::SlraBranchLazySvd,
                        },
                        sigma_hat_k: sol.sigma_hat_k,
                        sigma_hat_bk: sol.sigma_hat_bk,
                    };
                }
                write_handle(w_out, sol.w)
            }
            Err(e) => fail(e),
        }
    })
}

/// Plain sketch-and-solve pipeline (`p > 2`).
///
/// # Safety
/// Valid handle; `z_out` a valid pointer location.
#[no_mangle]
pub unsafe extern "C" fn slra_lw_lra(
    a: *const SlraMatrix,
    k: usize,
    p: f64,
    eps: f64,
    seed: u64,
    z_out: *mut *mut SlraMatrix,
) -> SlraStatus {
    guard(|| {
        let Some(mat) = matrix_ref(a) else {
            set_error("null matrix handle");
            return SlraStatus::SlraErrInvalidArgument;
        };
        let cfg = match slra::sketch::SketchConfig::new(p, k, eps, seed) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        match slra::sketch::lw_lra(mat, &cfg) {
            Ok(sol) => write_handle(z_out, sol.z),
            Err(e) => fail(e),
        }
    })
}

/// Combined sketch + iterative pipeline (`p > 2`).
///
/// # Safety
/// Valid handle; `z_out` a valid pointer location.
#[no_mangle]
pub unsafe extern "C" fn slra_combined_lra(
    a: *const SlraMatrix,
    k: usize,
    p: f64,
    eps: f64,
    seed: u64,
    z_out: *mut *mut SlraMatrix,
) -> SlraStatus {
    guard(|| {
        let Some(mat) = matrix_ref(a) else {
            set_error("null matrix handle");
            return SlraStatus::SlraErrInvalidArgument;
        };
        match slra::sketch::combined_lra(mat, k, p, eps, seed) {
            Ok(sol) => write_handle(z_out, sol.z),
            Err(e) => fail(e),
        }
    })
}

/// Deflation solver. On success `*v_out` holds the raw `cols x k` basis and
/// `*kappa_out` (optional) its measured condition number (at most 4).
///
/// # Safety
/// Valid handle; `v_out` a valid pointer location; `kappa_out` writable or
/// null.
#[no_mangle]
pub unsafe extern "C" fn slra_lazysvd(
    a: *const SlraMatrix,
    k: usize,
    eps: f64,
    eta: f64,
    seed: u64,
    v_out: *mut *mut SlraMatrix,
    kappa_out: *mut f64,
) -> SlraStatus {
    guard(|| {
        let Some(mat) = matrix_ref(a) else {
            set_error("null matrix handle");
            return SlraStatus::SlraErrInvalidArgument;
        };
        match slra::lazysvd::modified_lazysvd(mat, k, eps, eta, seed) {
            Ok(state) => {
                if !kappa_out.is_null() {
                    *kappa_out = state.kappa_estimate;
                }
                let v = state.v().expect("k >= 1").clone();
                write_handle(v_out, v)
            }
            Err(e) => fail(e),
        }
    })
}

/// Crossover exponents of the cost model.
///
/// # Safety
/// `p_star_out` and `p_tilde_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn slra_crossover_points(
    omega: f64,
    alpha: f64,
    p_star_out: *mut f64,
    p_tilde_out: *mut f64,
) -> SlraStatus {
    guard(|| {
        let params = match CostModelParams::new(omega, alpha) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        match slra::cost::crossover_points(&params) {
            Ok(c) => {
                if p_star_out.is_null() || p_tilde_out.is_null() {
                    set_error("output pointer is null");
                    return SlraStatus::SlraErrInvalidArgument;
                }
                *p_star_out = c.p_star;
                *p_tilde_out = c.p_tilde;
                SlraStatus::SlraOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Ratio of `||A (I - W W^T)||_p` to the exact optimum. When the optimum is
/// numerically zero, `*is_absolute_out` is set to 1 and `*ratio_out` carries
/// the absolute residual instead.
///
/// # Safety
/// Valid handles; `ratio_out` and `is_absolute_out` writable.
#[no_mangle]
pub unsafe extern "C" fn slra_approximation_ratio(
    a: *const SlraMatrix,
    w: *const SlraMatrix,
    p: f64,
    ratio_out: *mut f64,
    is_absolute_out: *mut i32,
) -> SlraStatus {
    guard(|| {
        let (Some(am), Some(wm)) = (matrix_ref(a), matrix_ref(w)) else {
            set_error("null matrix handle");
            return SlraStatus::SlraErrInvalidArgument;
        };
        if ratio_out.is_null() || is_absolute_out.is_null() {
            set_error("output pointer is null");
            return SlraStatus::SlraErrInvalidArgument;
        }
        match slra::metrics::approximation_ratio(am, wm, p) {
            Ok(slra::metrics::ApproxRatio::Ratio(r)) => {
                *ratio_out = r;
                *is_absolute_out = 0;
                SlraStatus::SlraOk
            }
            Ok(slra::metrics::ApproxRatio::AbsoluteError(e)) => {
                *ratio_out = e;
                *is_absolute_out = 1;
                SlraStatus::SlraOk
            }
            Err(e) => fail(e),
        }
    })
}
