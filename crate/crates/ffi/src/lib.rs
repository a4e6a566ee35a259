//! C ABI over `efbound`.
//!
//! Matrices cross the boundary as opaque `EfbMatrix` handles; polyhedra,
//! EFs, graphs, reports and certificates as JSON strings in the library's
//! file formats. Every call returns an `EfbStatus`; on failure the message
//! is available from `efb_last_error` on the same thread. Strings returned
//! through out-parameters are owned by the caller and released with
//! `efb_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use efbound::budget::Budget;
use efbound::certificate::Certificate;
use efbound::encodings::{clique_number, hardpair_slack, psd_factors, Graph};
use efbound::nnfact::{nnegrk_bounds, rect_cover_lb, NmfConfig};
use efbound::polyhedra::{dilate, verify_sandwich, ExtendedFormulation, HRep, VRep};
use efbound::ratlin::{mat_rank, parse_rational, RationalMatrix, Rational};
use efbound::udisj::{build_shift, corruption_rhs, shift_rank_lb, CorruptionParams, Fill};
use efbound::Error;

/// Mirrors the CLI exit statuses; the last two are ABI-only.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EfbStatus {
    Ok = 0,
    VerificationFailed = 1,
    InputError = 2,
    BudgetExhausted = 3,
    InternalError = 4,
    NullPointer = 5,
    Panic = 6,
}

/// Opaque exact rational matrix.
pub struct EfbMatrix(RationalMatrix);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> EfbStatus {
    match e.exit_code() {
        1 => EfbStatus::VerificationFailed,
        2 => EfbStatus::InputError,
        3 => EfbStatus::BudgetExhausted,
        _ => EfbStatus::InternalError,
    }
}

enum Fail {
    Null,
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

impl From<serde_json::Error> for Fail {
    fn from(e: serde_json::Error) -> Self {
        Fail::Core(Error::input(format!("json: {e}")))
    }
}

type Res<T> = Result<T, Fail>;

fn guard(f: impl FnOnce() -> Res<EfbStatus>) -> EfbStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err(Fail::Null)) => {
            set_error("null pointer argument");
            EfbStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("panic inside efbound");
            EfbStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Res<&'a str> {
    if p.is_null() {
        return Err(Fail::Null);
    }
    Ok(CStr::from_ptr(p).to_str().map_err(|_| Error::input("argument is not valid UTF-8"))?)
}

unsafe fn json_arg<T: serde::de::DeserializeOwned>(p: *const c_char) -> Res<T> {
    Ok(serde_json::from_str(str_arg(p)?)?)
}

fn into_c_string(s: String) -> Res<*mut c_char> {
    Ok(CString::new(s).map(CString::into_raw).map_err(|_| Error::internal("interior NUL in output"))?)
}

unsafe fn put<T>(out: *mut T, v: T) -> Res<()> {
    if out.is_null() {
        return Err(Fail::Null);
    }
    out.write(v);
    Ok(())
}

unsafe fn matrix_ref<'a>(m: *const EfbMatrix) -> Res<&'a RationalMatrix> {
    m.as_ref().map(|m| &m.0).ok_or(Fail::Null)
}

unsafe fn put_matrix(out: *mut *mut EfbMatrix, m: RationalMatrix) -> Res<EfbStatus> {
    put(out, Box::into_raw(Box::new(EfbMatrix(m))))?;
    Ok(EfbStatus::Ok)
}

fn rho_arg(s: &str) -> Res<Rational> {
    Ok(parse_rational(s)?)
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library on this thread.
#[no_mangle]
pub extern "C" fn efb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn efb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses `{"rows", "cols", "entries"}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn efb_matrix_from_json(json: *const c_char, out: *mut *mut EfbMatrix) -> EfbStatus {
    guard(|| {
        let m: RationalMatrix = json_arg(json)?;
        put_matrix(out, m)
    })
}

/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn efb_matrix_to_json(m: *const EfbMatrix, out: *mut *mut c_char) -> EfbStatus {
    guard(|| {
        let s = serde_json::to_string(matrix_ref(m)?)?;
        put(out, into_c_string(s)?)?;
        Ok(EfbStatus::Ok)
    })
}

/// # Safety
/// `m` must be a live handle; `rows` and `cols` must be writable.
#[no_mangle]
pub unsafe extern "C" fn efb_matrix_shape(m: *const EfbMatrix, rows: *mut usize, cols: *mut usize) -> EfbStatus {
    guard(|| {
        let m = matrix_ref(m)?;
        put(rows, m.rows())?;
        put(cols, m.cols())?;
        Ok(EfbStatus::Ok)
    })
}

/// Entry `(i, j)` as a canonical `"p/q"` string.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn efb_matrix_entry(m: *const EfbMatrix, i: usize, j: usize, out: *mut *mut c_char) -> EfbStatus {
    guard(|| {
        let m = matrix_ref(m)?;
        if i >= m.rows() || j >= m.cols() {
            return Err(Error::input(format!("index ({i}, {j}) outside {}x{}", m.rows(), m.cols())).into());
        }
        put(out, into_c_string(efbound::ratlin::format_rational(&m[(i, j)]))?)?;
        Ok(EfbStatus::Ok)
    })
}

/// # Safety
/// `m` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn efb_matrix_free(m: *mut EfbMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Slack matrix of `(COR(n), ρQ(n))`; `rho` is a rational string.
///
/// # Safety
/// `rho` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn efb_hardpair_slack(n: usize, rho: *const c_char, out: *mut *mut EfbMatrix) -> EfbStatus {
    guard(|| {
        let s = hardpair_slack(n, &rho_arg(str_arg(rho)?)?)?;
        put_matrix(out, s.full())
    })
}

/// ρ-extension of unique disjointness with the hard-pair fill.
///
/// # Safety
/// `rho` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn efb_udisj_shift(n: usize, rho: *const c_char, out: *mut *mut EfbMatrix) -> EfbStatus {
    guard(|| {
        let m = build_shift(n, &rho_arg(str_arg(rho)?)?, &Fill::HardPair, &Budget::default().with_env_deadline())?;
        put_matrix(out, m)
    })
}

/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn efb_mat_rank(m: *const EfbMatrix, out: *mut usize) -> EfbStatus {
    guard(|| {
        put(out, mat_rank(matrix_ref(m)?))?;
        Ok(EfbStatus::Ok)
    })
}

/// Rectangle-cover lower bound. On `BudgetExhausted`, `out` holds the best
/// bound found so far.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn efb_rect_cover_lb(m: *const EfbMatrix, max_steps: u64, out: *mut usize) -> EfbStatus {
    guard(|| {
        let m = matrix_ref(m)?;
        match rect_cover_lb(m, &Budget::steps(max_steps).with_env_deadline()) {
            Ok(rc) => {
                put(out, rc.bound)?;
                Ok(EfbStatus::Ok)
            }
            Err(e @ Error::Budget { best: Some(b), .. }) => {
                put(out, b)?;
                Err(e.into())
            }
            Err(e) => Err(e.into()),
        }
    })
}

/// Certified `lower <= nnegrk(m) <= upper`.
///
/// # Safety
/// `m` must be a live handle; `lower` and `upper` must be writable.
#[no_mangle]
pub unsafe extern "C" fn efb_nnegrk_bounds(m: *const EfbMatrix, seed: u64, lower: *mut usize, upper: *mut usize) -> EfbStatus {
    guard(|| {
        let cfg = NmfConfig { seed, ..NmfConfig::default() };
        let b = nnegrk_bounds(matrix_ref(m)?, &cfg, &Budget::default().with_env_deadline())?;
        put(lower, b.lower)?;
        put(upper, b.upper)?;
        Ok(EfbStatus::Ok)
    })
}

/// `<T_a, U^b> = (1 - aᵀb)²` for all `a, b ⊆ [n]`; `VerificationFailed`
/// when some pair fails.
///
/// # Safety
/// `pairs_checked` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn efb_psd_check(n: usize, pairs_checked: *mut u64) -> EfbStatus {
    guard(|| {
        let rep = psd_factors(n)?;
        if !pairs_checked.is_null() {
            pairs_checked.write(rep.pairs_checked);
        }
        if let Some((a, b)) = rep.mismatch {
            set_error(format!("PSD identity fails at a = {a:#b}, b = {b:#b}"));
            return Ok(EfbStatus::VerificationFailed);
        }
        Ok(EfbStatus::Ok)
    })
}

/// Clique number of a graph given as `{"n", "vertices", "edges"}`.
///
/// # Safety
/// `graph_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn efb_clique_number(graph_json: *const c_char, out: *mut usize) -> EfbStatus {
    guard(|| {
        let g: Graph = json_arg(graph_json)?;
        put(out, clique_number(&g)?)?;
        Ok(EfbStatus::Ok)
    })
}

/// Checks `P ⊆ K ⊆ ρQ`. Writes the report to `report`; on failure also
/// writes the certificate to `certificate` (when non-NULL) and returns
/// `VerificationFailed`.
///
/// # Safety
/// String arguments must be NUL-terminated; `report` must be writable and
/// `certificate` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn efb_verify_sandwich(
    p_json: *const c_char,
    q_json: *const c_char,
    rho: *const c_char,
    ef_json: *const c_char,
    report: *mut *mut c_char,
    certificate: *mut *mut c_char,
) -> EfbStatus {
    guard(|| {
        let p: VRep = json_arg(p_json)?;
        let q: HRep = json_arg(q_json)?;
        let k: ExtendedFormulation = json_arg(ef_json)?;
        let rho = rho_arg(str_arg(rho)?)?;
        let rep = verify_sandwich(&p, &q, &rho, &k)?;
        put(report, into_c_string(serde_json::to_string(&rep)?)?)?;
        if rep.passed() {
            return Ok(EfbStatus::Ok);
        }
        if !certificate.is_null() {
            let cert = rep
                .certificate(&k, &dilate(&q, &rho)?)
                .ok_or_else(|| Error::internal("failing sandwich report without certificate"))?;
            certificate.write(into_c_string(serde_json::to_string(&cert)?)?);
        }
        set_error("sandwich check failed");
        Ok(EfbStatus::VerificationFailed)
    })
}

/// Re-verifies a certificate; `valid` receives the verdict.
///
/// # Safety
/// `json` must be a NUL-terminated string; `valid` must be writable.
#[no_mangle]
pub unsafe extern "C" fn efb_check_certificate(json: *const c_char, valid: *mut bool) -> EfbStatus {
    guard(|| {
        let c: Certificate = json_arg(json)?;
        put(valid, c.check())?;
        Ok(EfbStatus::Ok)
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn efb_corruption_rhs(eps: f64, c: f64, l: usize, out: *mut f64) -> EfbStatus {
    guard(|| {
        put(out, corruption_rhs(&CorruptionParams { eps, c }, l)?)?;
        Ok(EfbStatus::Ok)
    })
}

/// Lower bound on the nonnegative rank of a ρ-extension; pass NaN as
/// `eps` for `ε = 1/(2ρ)`.
///
/// # Safety
/// `rho` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn efb_shift_rank_lb(n: usize, rho: *const c_char, eps: f64, c: f64, out: *mut f64) -> EfbStatus {
    guard(|| {
        let eps = if eps.is_nan() { None } else { Some(eps) };
        put(out, shift_rank_lb(n, &rho_arg(str_arg(rho)?)?, eps, c)?.value)?;
        Ok(EfbStatus::Ok)
    })
}

/// Static version string.
#[no_mangle]
pub extern "C" fn efb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
