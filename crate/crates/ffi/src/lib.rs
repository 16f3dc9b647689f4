//! C ABI for `mmdecomp`.
//!
//! Matrices and plans are handed out as opaque heap handles which the caller
//! releases with the matching `*_free` function. Every fallible call returns
//! an [`MmStatus`]; on failure a description is available from
//! [`mm_last_error_message`] on the same thread. Complex entries cross the
//! boundary as interleaved `(re, im)` doubles in row-major order. Indices are
//! 0-based.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mmdecomp::{
    decompose, factor_count_bound, fidelity, haar_random_unitary, io, reconstruct, reconstruct_perturbed,
    unitarity, Complex, ComplexMatrix, DecompositionPlan, Error, NoiseModel,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotUnitary = 4,
    InvalidPlan = 5,
    DecompositionFailed = 6,
    Format = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Opaque dense complex matrix.
pub struct MmMatrix(ComplexMatrix);

/// Opaque decomposition plan.
pub struct MmPlan(DecompositionPlan);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(MmStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DimensionMismatch(_) | Error::NotSquare { .. } => MmStatus::DimensionMismatch,
            Error::NotUnitary { .. } => MmStatus::NotUnitary,
            Error::InvalidPlan(_) => MmStatus::InvalidPlan,
            Error::InvariantViolation(_) | Error::BudgetExhausted { .. } => MmStatus::DecompositionFailed,
            Error::Format(_) | Error::Json(_) | Error::Io(_) => MmStatus::Format,
            Error::InvalidArgument(_) | Error::Calibration(_) | Error::ZeroNorm => MmStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            MmStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            MmStatus::Panic
        }
    }
}

fn null() -> Failure {
    Failure(MmStatus::NullPointer, "null pointer argument".into())
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(null)
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn store_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    let c = CString::new(s).map_err(|e| Failure(MmStatus::Format, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| Failure(MmStatus::Format, e.to_string()))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn mm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a `rows x cols` matrix from `2 * rows * cols` interleaved doubles.
///
/// # Safety
/// `entries` must point to `2 * rows * cols` readable doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn mm_matrix_new(
    rows: usize,
    cols: usize,
    entries: *const f64,
    out: *mut *mut MmMatrix,
) -> MmStatus {
    guard(|| {
        if entries.is_null() {
            return Err(null());
        }
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Failure(MmStatus::InvalidArgument, "matrix too large".into()))?;
        let raw = std::slice::from_raw_parts(entries, 2 * len);
        let data = raw.chunks_exact(2).map(|p| Complex::new(p[0], p[1])).collect();
        store(out, MmMatrix(ComplexMatrix::from_vec(rows, cols, data)?))
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_matrix_identity(n: usize, out: *mut *mut MmMatrix) -> MmStatus {
    guard(|| {
        if n == 0 {
            return Err(Failure(MmStatus::InvalidArgument, "size must be at least 1".into()));
        }
        store(out, MmMatrix(ComplexMatrix::identity(n)))
    })
}

/// Haar-random `n x n` unitary, deterministic in `seed`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_matrix_haar_random(n: usize, seed: u64, out: *mut *mut MmMatrix) -> MmStatus {
    guard(|| store(out, MmMatrix(haar_random_unitary(n, seed)?)))
}

/// # Safety
/// `m` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mm_matrix_free(m: *mut MmMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be a live handle; `rows` and `cols` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_matrix_shape(m: *const MmMatrix, rows: *mut usize, cols: *mut usize) -> MmStatus {
    guard(|| {
        let m = deref(m)?;
        if rows.is_null() || cols.is_null() {
            return Err(null());
        }
        *rows = m.0.rows();
        *cols = m.0.cols();
        Ok(())
    })
}

/// Copies the entries as interleaved doubles into `buf`, which must hold at
/// least `2 * rows * cols` values (`len` counts doubles).
///
/// # Safety
/// `m` must be a live handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mm_matrix_entries(m: *const MmMatrix, buf: *mut f64, len: usize) -> MmStatus {
    guard(|| {
        let m = deref(m)?;
        if buf.is_null() {
            return Err(null());
        }
        let need = 2 * m.0.as_slice().len();
        if len < need {
            return Err(Failure(
                MmStatus::BufferTooSmall,
                format!("buffer holds {len} doubles, need {need}"),
            ));
        }
        let out = std::slice::from_raw_parts_mut(buf, need);
        for (pair, z) in out.chunks_exact_mut(2).zip(m.0.as_slice()) {
            pair[0] = z.re;
            pair[1] = z.im;
        }
        Ok(())
    })
}

/// Max-norm of `m^dagger m - I`.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_matrix_unitarity_defect(m: *const MmMatrix, out: *mut f64) -> MmStatus {
    guard(|| {
        let m = deref(m)?;
        if out.is_null() {
            return Err(null());
        }
        *out = unitarity(&m.0, 0.0)?.defect;
        Ok(())
    })
}

/// Serializes a matrix in the JSON matrix format. Release the string with
/// [`mm_string_free`].
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_matrix_to_json(m: *const MmMatrix, out: *mut *mut c_char) -> MmStatus {
    guard(|| store_string(out, io::matrix_to_json(&deref(m)?.0)?))
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_matrix_from_json(json: *const c_char, out: *mut *mut MmMatrix) -> MmStatus {
    guard(|| store(out, MmMatrix(io::matrix_from_json(read_str(json)?)?)))
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Trace fidelity between a target and a possibly non-unitary matrix.
///
/// # Safety
/// `q` and `q_pert` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_fidelity(q: *const MmMatrix, q_pert: *const MmMatrix, out: *mut f64) -> MmStatus {
    guard(|| {
        let (q, qp) = (deref(q)?, deref(q_pert)?);
        if out.is_null() {
            return Err(null());
        }
        *out = fidelity(&q.0, &qp.0)?;
        Ok(())
    })
}

/// Decomposes `u` into blocks of size at most `m`. A `tol` that is negative
/// or NaN selects the default threshold.
///
/// # Safety
/// `u` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_decompose(u: *const MmMatrix, m: usize, tol: f64, out: *mut *mut MmPlan) -> MmStatus {
    guard(|| {
        let u = deref(u)?;
        let tol = (tol >= 0.0).then_some(tol);
        store(out, MmPlan(decompose(&u.0, m, tol)?))
    })
}

/// # Safety
/// `p` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mm_plan_free(p: *mut MmPlan) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Mode count `n`, requested block size `m` and number of factors.
///
/// # Safety
/// `p` must be a live handle; output pointers may be null to skip a value.
#[no_mangle]
pub unsafe extern "C" fn mm_plan_info(
    p: *const MmPlan,
    n: *mut usize,
    m: *mut usize,
    factor_count: *mut usize,
) -> MmStatus {
    guard(|| {
        let p = &deref(p)?.0;
        if !n.is_null() {
            *n = p.n();
        }
        if !m.is_null() {
            *m = p.m();
        }
        if !factor_count.is_null() {
            *factor_count = p.factors().len();
        }
        Ok(())
    })
}

/// Copies the `n` diagonal phases into `buf` (`len` counts doubles).
///
/// # Safety
/// `p` must be a live handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mm_plan_phases(p: *const MmPlan, buf: *mut f64, len: usize) -> MmStatus {
    guard(|| {
        let p = &deref(p)?.0;
        if buf.is_null() {
            return Err(null());
        }
        let phases = p.phases();
        if len < phases.len() {
            return Err(Failure(
                MmStatus::BufferTooSmall,
                format!("buffer holds {len} doubles, need {}", phases.len()),
            ));
        }
        ptr::copy_nonoverlapping(phases.as_ptr(), buf, phases.len());
        Ok(())
    })
}

/// Factor `index`: its base row, its `size` columns (written to `columns`,
/// which holds `columns_len` entries) and a copy of its block.
///
/// # Safety
/// `p` must be a live handle; `size`, `base_row` and `block` must be
/// writable; `columns` must point to `columns_len` writable values.
#[no_mangle]
pub unsafe extern "C" fn mm_plan_factor(
    p: *const MmPlan,
    index: usize,
    size: *mut usize,
    base_row: *mut usize,
    columns: *mut usize,
    columns_len: usize,
    block: *mut *mut MmMatrix,
) -> MmStatus {
    guard(|| {
        let p = &deref(p)?.0;
        if size.is_null() || base_row.is_null() || columns.is_null() {
            return Err(null());
        }
        let f = p.factors().get(index).ok_or_else(|| {
            Failure(
                MmStatus::InvalidArgument,
                format!("factor index {index} out of range ({} factors)", p.factors().len()),
            )
        })?;
        if columns_len < f.size() {
            return Err(Failure(
                MmStatus::BufferTooSmall,
                format!("column buffer holds {columns_len}, need {}", f.size()),
            ));
        }
        *size = f.size();
        *base_row = f.base_row();
        ptr::copy_nonoverlapping(f.columns().as_ptr(), columns, f.size());
        store(block, MmMatrix(f.block().clone()))
    })
}

/// `D * Q_N^dagger * ... * Q_1^dagger`.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_plan_reconstruct(p: *const MmPlan, out: *mut *mut MmMatrix) -> MmStatus {
    guard(|| store(out, MmMatrix(reconstruct(&deref(p)?.0))))
}

/// Reconstruction with Gaussian noise of width `sigma` added to every block.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_plan_reconstruct_perturbed(
    p: *const MmPlan,
    sigma: f64,
    seed: u64,
    out: *mut *mut MmMatrix,
) -> MmStatus {
    guard(|| {
        let noise = NoiseModel::new(sigma, seed)?;
        store(out, MmMatrix(reconstruct_perturbed(&deref(p)?.0, &noise)))
    })
}

/// Serializes a plan in the JSON plan format (1-based indices). Release the
/// string with [`mm_string_free`].
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_plan_to_json(p: *const MmPlan, out: *mut *mut c_char) -> MmStatus {
    guard(|| store_string(out, io::plan_to_json(&deref(p)?.0)?))
}

/// Parses and validates a plan.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_plan_from_json(json: *const c_char, out: *mut *mut MmPlan) -> MmStatus {
    guard(|| store(out, MmPlan(io::plan_from_json(read_str(json)?)?)))
}

/// Maximum number of factors for an `n x n` unitary and block size `m`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_factor_count_bound(n: usize, m: usize, out: *mut usize) -> MmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        *out = factor_count_bound(n, m)?;
        Ok(())
    })
}
