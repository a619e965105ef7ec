//! C ABI over `nugap`.
//!
//! Every entry point returns a [`NugapStatus`]; results go through out
//! pointers. Handles are opaque and must be released with the matching
//! `*_free` function. After a non-`Ok` status, `nugap_last_error` returns a
//! message describing the failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nugap::algebra::{index_w, AElement};
use nugap::metrics::{self, Branch, MetricResult};
use nugap::plant_spec::{parse_element, parse_spec};
use nugap::plants::Plant;
use nugap::stability;
use nugap::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NugapStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    NotInvertible = 4,
    Inconclusive = 5,
    Precondition = 6,
    Numerical = 7,
    Panic = 8,
}

/// Opaque plant handle.
pub struct NugapPlant(Plant);

/// Opaque handle to an element of the algebra.
pub struct NugapElement(AElement);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NugapMetric {
    pub value: f64,
    /// 1 when the value came from the unity branch.
    pub unity: i32,
    /// 1 when some condition could not be decided numerically.
    pub inconclusive: i32,
    /// Certified margin of the deciding invertibility test, NaN if none.
    pub margin: f64,
    pub error_bound: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NugapIndex {
    pub w_av: f64,
    pub w: i64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    let c = CString::new(msg).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> NugapStatus {
    match e {
        Error::Parse { .. } | Error::Normalization { .. } => NugapStatus::Parse,
        Error::InvalidArgument(_) | Error::NoExtension => NugapStatus::InvalidArgument,
        Error::NotInvertible(_) => NugapStatus::NotInvertible,
        Error::Inconclusive { .. } | Error::IndexResolution { .. } => NugapStatus::Inconclusive,
        Error::Precondition(_) => NugapStatus::Precondition,
        Error::Numerical(_) => NugapStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (NugapStatus, String)>) -> NugapStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            NugapStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            NugapStatus::Panic
        }
    }
}

fn lift(e: Error) -> (NugapStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (NugapStatus, String) {
    (NugapStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (NugapStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (NugapStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn plant<'a>(p: *const NugapPlant, what: &str) -> Result<&'a Plant, (NugapStatus, String)> {
    p.as_ref().map(|h| &h.0).ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), (NugapStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

fn metric(r: &MetricResult) -> NugapMetric {
    NugapMetric {
        value: r.value,
        unity: (r.branch == Branch::Unity) as i32,
        inconclusive: r.is_inconclusive() as i32,
        margin: r.diagnostics.margin.unwrap_or(f64::NAN),
        error_bound: r.diagnostics.error_bound,
    }
}

fn tolerance(tol: f64) -> Result<f64, (NugapStatus, String)> {
    if tol > 0.0 && tol.is_finite() {
        Ok(tol)
    } else if tol == 0.0 {
        Ok(metrics::DEFAULT_TOL)
    } else {
        Err((NugapStatus::InvalidArgument, format!("tolerance must be positive, got {tol}")))
    }
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn nugap_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// `k e^{-sτ}` with its normalized coprime factorization.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn nugap_plant_gain_delay(k: f64, tau: f64, out: *mut *mut NugapPlant) -> NugapStatus {
    guard(|| {
        let p = Plant::gain_delay(k, tau).map_err(lift)?;
        put(out, Box::into_raw(Box::new(NugapPlant(p))))
    })
}

/// `b / (s + a)` with its normalized coprime factorization.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn nugap_plant_first_order(a: f64, b: f64, out: *mut *mut NugapPlant) -> NugapStatus {
    guard(|| {
        let p = Plant::first_order(a, b).map_err(lift)?;
        put(out, Box::into_raw(Box::new(NugapPlant(p))))
    })
}

/// Parses a one-line plant description such as `kind=gain_delay k=2 tau=1`.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nugap_plant_parse(spec: *const c_char, out: *mut *mut NugapPlant) -> NugapStatus {
    guard(|| {
        let s = text(spec, "spec")?;
        let p = parse_spec(s).and_then(|sp| sp.build()).map_err(lift)?;
        put(out, Box::into_raw(Box::new(NugapPlant(p))))
    })
}

/// Releases a plant handle. Null is ignored.
///
/// # Safety
/// `p` must come from a `nugap_plant_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nugap_plant_free(p: *mut NugapPlant) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Frequency response `P(iy)`.
///
/// # Safety
/// `p` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nugap_plant_eval(
    p: *const NugapPlant,
    y: f64,
    re: *mut f64,
    im: *mut f64,
) -> NugapStatus {
    guard(|| {
        let v = plant(p, "plant")?.transfer(y);
        put(re, v.re)?;
        put(im, v.im)
    })
}

/// `d_{A+}(P₁, P₂)`. A `tol` of 0 selects the library default.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nugap_d_aplus(
    p1: *const NugapPlant,
    p2: *const NugapPlant,
    tol: f64,
    out: *mut NugapMetric,
) -> NugapStatus {
    guard(|| {
        let r = metrics::d_aplus(plant(p1, "p1")?, plant(p2, "p2")?, tolerance(tol)?);
        put(out, metric(&r))
    })
}

/// `d_{H∞}(P₁, P₂)` from the annulus trace.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nugap_d_hinf(
    p1: *const NugapPlant,
    p2: *const NugapPlant,
    tol: f64,
    out: *mut NugapMetric,
) -> NugapStatus {
    guard(|| {
        let r = metrics::d_hinf(plant(p1, "p1")?, plant(p2, "p2")?, tolerance(tol)?).map_err(lift)?;
        put(out, metric(&r))
    })
}

/// `d_{H∞,ρ}(P₁, P₂)` for `ρ ∈ (0, 1)`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nugap_d_hinf_rho(
    p1: *const NugapPlant,
    p2: *const NugapPlant,
    rho: f64,
    tol: f64,
    out: *mut NugapMetric,
) -> NugapStatus {
    guard(|| {
        let r = metrics::d_hinf_rho(plant(p1, "p1")?, plant(p2, "p2")?, rho, tolerance(tol)?)
            .map_err(lift)?;
        put(out, metric(&r))
    })
}

/// Stability margin `μ_{P,C}`; 0 when `C` does not stabilize `P`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nugap_mu(
    p: *const NugapPlant,
    c: *const NugapPlant,
    tol: f64,
    out: *mut f64,
) -> NugapStatus {
    guard(|| {
        let r = stability::mu(plant(p, "plant")?, plant(c, "controller")?, tolerance(tol)?);
        put(out, r.mu)
    })
}

/// Parses an element written as `ap=[(c,delay),...] atoms=[...]`.
///
/// # Safety
/// `src` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nugap_element_parse(src: *const c_char, out: *mut *mut NugapElement) -> NugapStatus {
    guard(|| {
        let s = text(src, "element")?;
        let e = parse_element(s).map_err(lift)?;
        put(out, Box::into_raw(Box::new(NugapElement(e))))
    })
}

/// Releases an element handle. Null is ignored.
///
/// # Safety
/// `e` must come from `nugap_element_parse` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nugap_element_free(e: *mut NugapElement) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Value on the imaginary axis at `iy`.
///
/// # Safety
/// `e` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nugap_element_eval(
    e: *const NugapElement,
    y: f64,
    re: *mut f64,
    im: *mut f64,
) -> NugapStatus {
    guard(|| {
        let e = e.as_ref().ok_or_else(|| null("element"))?;
        let v = e.0.eval(y);
        put(re, v.re)?;
        put(im, v.im)
    })
}

/// Index `(w_av, w)` of an invertible element.
///
/// # Safety
/// `e` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nugap_element_index(
    e: *const NugapElement,
    tol: f64,
    out: *mut NugapIndex,
) -> NugapStatus {
    guard(|| {
        let e = e.as_ref().ok_or_else(|| null("element"))?;
        let w = index_w(&e.0, tolerance(tol)?).map_err(lift)?;
        put(out, NugapIndex { w_av: w.w_av, w: w.w })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_mapping() {
        assert_eq!(status_of(&Error::Numerical("x".into())), NugapStatus::Numerical);
        assert_eq!(
            status_of(&Error::Parse { line: 1, column: 2, message: "m".into() }),
            NugapStatus::Parse
        );
    }

    #[test]
    fn panics_are_contained() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, NugapStatus::Panic);
        let msg = unsafe { CStr::from_ptr(nugap_last_error()) };
        assert!(msg.to_str().unwrap().contains("boom"));
    }
}
