//! C interface to measurekit.
//!
//! Measures cross the boundary as opaque `MkMeasure` handles created from
//! JSON expression documents. Every fallible function returns a status code;
//! on failure, `mk_last_error_message` describes the error on the calling
//! thread. Strings returned by the library are freed with `mk_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use measurekit::verify::{self, Region};
use measurekit::{doc, logdensity2, logdensity3, sample, Measure, MeasureError, WeightClass};

/// Success.
pub const MK_OK: i32 = 0;
/// Invalid input: bad JSON, bad parameters, wrong point shape.
pub const MK_ERR_INVALID: i32 = 1;
/// Measure-theoretic failure: unrelated primitive measures or an undefined density.
pub const MK_ERR_MEASURE: i32 = 2;
/// A required pointer argument was null.
pub const MK_ERR_NULL: i32 = 3;
/// The library panicked; this is a bug.
pub const MK_ERR_PANIC: i32 = 4;

/// Value classes written by `mk_logdensity`.
pub const MK_FINITE: i32 = 0;
pub const MK_POS_INF: i32 = 1;
pub const MK_NEG_INF: i32 = 2;
pub const MK_UNDEFINED: i32 = 3;

/// Opaque measure handle.
pub struct MkMeasure {
    inner: Measure,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn measure_status(e: &MeasureError) -> i32 {
    set_error(&e.to_string());
    if e.is_measure_theoretic() {
        MK_ERR_MEASURE
    } else {
        MK_ERR_INVALID
    }
}

fn guard(f: impl FnOnce() -> i32) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => {
            set_error("internal panic");
            MK_ERR_PANIC
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, i32> {
    if p.is_null() {
        set_error("null string argument");
        return Err(MK_ERR_NULL);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string argument is not UTF-8");
        MK_ERR_INVALID
    })
}

/// Message for the last failed call on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a JSON expression document into a new handle stored in `*out`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mk_measure_parse_json(json: *const c_char, out: *mut *mut MkMeasure) -> i32 {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return MK_ERR_NULL;
        }
        *out = ptr::null_mut();
        let text = match str_arg(json) {
            Ok(t) => t,
            Err(code) => return code,
        };
        match doc::parse_str(text) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(MkMeasure { inner: m }));
                MK_OK
            }
            Err(e) => {
                set_error(&e.to_string());
                MK_ERR_INVALID
            }
        }
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `m` must come from `mk_measure_parse_json` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mk_measure_free(m: *mut MkMeasure) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Log-density of `mu` at the JSON point `point_json`, with respect to `nu`,
/// or to the base measure of `mu` when `nu` is null. The value goes to
/// `*out_value` and its class (`MK_FINITE`, ...) to `*out_class`.
///
/// # Safety
/// Handles must be live; strings NUL-terminated; output pointers valid.
#[no_mangle]
pub unsafe extern "C" fn mk_logdensity(
    mu: *const MkMeasure,
    nu: *const MkMeasure,
    point_json: *const c_char,
    out_value: *mut f64,
    out_class: *mut i32,
) -> i32 {
    guard(|| {
        if mu.is_null() || out_value.is_null() || out_class.is_null() {
            set_error("null argument");
            return MK_ERR_NULL;
        }
        let text = match str_arg(point_json) {
            Ok(t) => t,
            Err(code) => return code,
        };
        let x = match doc::parse_point_str(text) {
            Ok(x) => x,
            Err(e) => {
                set_error(&e.to_string());
                return MK_ERR_INVALID;
            }
        };
        let mu = &(*mu).inner;
        let result = if nu.is_null() { logdensity2(mu, &x) } else { logdensity3(mu, &(*nu).inner, &x) };
        match result {
            Ok(v) => {
                *out_value = v.to_f64();
                *out_class = match v.class() {
                    WeightClass::Finite => MK_FINITE,
                    WeightClass::PosInf => MK_POS_INF,
                    WeightClass::NegInf => MK_NEG_INF,
                    WeightClass::Undefined => MK_UNDEFINED,
                };
                MK_OK
            }
            Err(e) => measure_status(&e),
        }
    })
}

/// Draws one sample with `seed` and stores it as a JSON string in `*out_json`.
///
/// # Safety
/// `m` must be live and `out_json` valid. Free the string with `mk_string_free`.
#[no_mangle]
pub unsafe extern "C" fn mk_sample_json(m: *const MkMeasure, seed: u64, out_json: *mut *mut c_char) -> i32 {
    guard(|| {
        if m.is_null() || out_json.is_null() {
            set_error("null argument");
            return MK_ERR_NULL;
        }
        *out_json = ptr::null_mut();
        match sample(&(*m).inner, seed) {
            Ok(p) => {
                let text = doc::point_to_json(&p).to_string();
                *out_json = CString::new(text).unwrap_or_default().into_raw();
                MK_OK
            }
            Err(e) => measure_status(&e),
        }
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Mass of `m` over `[lo, hi]`: adaptive quadrature for continuous
/// measures, exact summation over the integers for discrete ones.
///
/// # Safety
/// `m` must be live and `out_mass` valid.
#[no_mangle]
pub unsafe extern "C" fn mk_mass_interval(
    m: *const MkMeasure,
    lo: f64,
    hi: f64,
    tol: f64,
    out_mass: *mut f64,
) -> i32 {
    guard(|| {
        if m.is_null() || out_mass.is_null() {
            set_error("null argument");
            return MK_ERR_NULL;
        }
        let m = &(*m).inner;
        let region = if verify::is_discrete(m) {
            Region::IntegerRange(lo.ceil() as i64, hi.floor() as i64)
        } else {
            Region::Interval(lo, hi)
        };
        match verify::mass(m, &region, tol) {
            Ok(v) => {
                *out_mass = v;
                MK_OK
            }
            Err(e) => measure_status(&e),
        }
    })
}
