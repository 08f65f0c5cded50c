//! C ABI for the deepwater library.
//!
//! Objects cross the boundary as opaque handles created and released by the
//! `dw_*_new/free` pairs; functions and reports travel as the library's JSON
//! formats. Every fallible call returns a [`DwStatus`]; on failure
//! [`dw_last_error_message`] holds a readable description for the calling
//! thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use deepwater::io::{self, BranchData, PeriodicFunctionData};
use deepwater::{dn, stokes, Error, PeriodicFunction, SolverConfig};

/// Status codes of every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DwStatus {
    /// Success.
    Ok = 0,
    /// Malformed input: null pointer, bad UTF-8/JSON or invalid parameters.
    InvalidInput = 1,
    /// The surface violates the diffeomorphism guard.
    GuardViolation = 2,
    /// The elliptic fixed point failed to contract.
    NoContraction = 3,
    /// Branch continuation stopped early; partial output was produced.
    PartialBranch = 4,
    /// Any other numerical failure.
    Numerical = 5,
    /// A panic was caught at the boundary.
    Internal = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(e: &Error) -> DwStatus {
    match e {
        Error::GuardViolation { .. } => DwStatus::GuardViolation,
        Error::NoContraction { .. } => DwStatus::NoContraction,
        Error::Io(_) | Error::Json(_) | Error::InvalidInput(_) | Error::InvalidParameter(_) => {
            DwStatus::InvalidInput
        }
        _ => DwStatus::Numerical,
    }
}

/// Opaque solver configuration handle.
pub struct DwConfig(SolverConfig);

/// Opaque periodic-function handle.
pub struct DwFunction(PeriodicFunction);

/// Last error message of the calling thread. The pointer stays valid until
/// the next failing call on the same thread; never free it.
#[no_mangle]
pub extern "C" fn dw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

unsafe fn read_cstr<'a>(ptr: *const c_char) -> Result<&'a str, DwStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(DwStatus::InvalidInput);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        DwStatus::InvalidInput
    })
}

fn guarded<F: FnOnce() -> DwStatus>(f: F) -> DwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic caught at the FFI boundary");
            DwStatus::Internal
        }
    }
}

/// Default solver configuration. Release with `dw_config_free`.
#[no_mangle]
pub extern "C" fn dw_config_default() -> *mut DwConfig {
    Box::into_raw(Box::new(DwConfig(SolverConfig::default())))
}

/// Parses a configuration from its JSON schema (unset fields take their
/// defaults). Returns null on error. Release with `dw_config_free`.
///
/// # Safety
/// `json` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dw_config_from_json(json: *const c_char) -> *mut DwConfig {
    let Ok(body) = read_cstr(json) else {
        return ptr::null_mut();
    };
    match serde_json::from_str::<SolverConfig>(body).map_err(Error::from) {
        Ok(cfg) => match cfg.validate() {
            Ok(()) => Box::into_raw(Box::new(DwConfig(cfg))),
            Err(e) => {
                set_error(&e.to_string());
                ptr::null_mut()
            }
        },
        Err(e) => {
            set_error(&e.to_string());
            ptr::null_mut()
        }
    }
}

/// Sets the truncation radius K of a configuration.
///
/// # Safety
/// `cfg` must be a live handle from `dw_config_default`/`dw_config_from_json`.
#[no_mangle]
pub unsafe extern "C" fn dw_config_set_trunc(cfg: *mut DwConfig, trunc: u32) -> DwStatus {
    let Some(cfg) = cfg.as_mut() else {
        set_error("null configuration handle");
        return DwStatus::InvalidInput;
    };
    cfg.0.trunc = trunc;
    match cfg.0.validate() {
        Ok(()) => DwStatus::Ok,
        Err(e) => {
            set_error(&e.to_string());
            DwStatus::InvalidInput
        }
    }
}

/// Releases a configuration handle (null is ignored).
///
/// # Safety
/// `cfg` must have been returned by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn dw_config_free(cfg: *mut DwConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Parses a periodic function from the shared coefficient JSON. Returns null
/// on error. Release with `dw_function_free`.
///
/// # Safety
/// `json` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dw_function_from_json(json: *const c_char) -> *mut DwFunction {
    let Ok(body) = read_cstr(json) else {
        return ptr::null_mut();
    };
    let parsed: Result<PeriodicFunction, Error> =
        serde_json::from_str::<PeriodicFunctionData>(body)
            .map_err(Error::from)
            .and_then(|d| d.to_function());
    match parsed {
        Ok(f) => Box::into_raw(Box::new(DwFunction(f))),
        Err(e) => {
            set_error(&e.to_string());
            ptr::null_mut()
        }
    }
}

/// Serializes a function to the coefficient JSON (floats carry 17
/// significant digits). Release the string with `dw_string_free`.
///
/// # Safety
/// `f` must be a live function handle.
#[no_mangle]
pub unsafe extern "C" fn dw_function_to_json(f: *const DwFunction) -> *mut c_char {
    let Some(f) = f.as_ref() else {
        set_error("null function handle");
        return ptr::null_mut();
    };
    match io::to_json_string(&PeriodicFunctionData::from(&f.0)) {
        Ok(body) => CString::new(body).map_or(ptr::null_mut(), CString::into_raw),
        Err(e) => {
            set_error(&e.to_string());
            ptr::null_mut()
        }
    }
}

/// Releases a function handle (null is ignored).
///
/// # Safety
/// `f` must have been returned by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn dw_function_free(f: *mut DwFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Releases a string returned by this library (null is ignored).
///
/// # Safety
/// `s` must have been returned by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn dw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Applies the Dirichlet-Neumann operator: `*out = G(eta) psi`.
///
/// # Safety
/// All handles must be live; `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn dw_dn_apply(
    cfg: *const DwConfig,
    eta: *const DwFunction,
    psi: *const DwFunction,
    out: *mut *mut DwFunction,
) -> DwStatus {
    guarded(|| {
        let (Some(cfg), Some(eta), Some(psi)) = (cfg.as_ref(), eta.as_ref(), psi.as_ref()) else {
            set_error("null argument to dw_dn_apply");
            return DwStatus::InvalidInput;
        };
        if out.is_null() {
            set_error("null output pointer");
            return DwStatus::InvalidInput;
        }
        match dn::apply_dn(&eta.0, &psi.0, &cfg.0) {
            Ok((g, _)) => {
                *out = Box::into_raw(Box::new(DwFunction(g)));
                DwStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Runs the algebraic-identity suite on seeded test data and returns the
/// discrepancy report as JSON in `*out_json` (release with
/// `dw_string_free`).
///
/// # Safety
/// All handles must be live; `out_json` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn dw_dn_verify(
    cfg: *const DwConfig,
    eta: *const DwFunction,
    seed: u64,
    out_json: *mut *mut c_char,
) -> DwStatus {
    guarded(|| {
        let (Some(cfg), Some(eta)) = (cfg.as_ref(), eta.as_ref()) else {
            set_error("null argument to dw_dn_verify");
            return DwStatus::InvalidInput;
        };
        if out_json.is_null() {
            set_error("null output pointer");
            return DwStatus::InvalidInput;
        }
        match dn::seeded_suite(&eta.0, seed, &cfg.0) {
            Ok(report) => match io::to_json_string(&report) {
                Ok(body) => {
                    *out_json = CString::new(body).map_or(ptr::null_mut(), CString::into_raw);
                    DwStatus::Ok
                }
                Err(e) => {
                    set_error(&e.to_string());
                    DwStatus::Numerical
                }
            },
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Continues the Stokes branch with base wavenumber `k` and gravity `g` up
/// to `eps_max` in steps of `eps_step`; the branch JSON lands in
/// `*out_json` (release with `dw_string_free`). A truncated branch returns
/// `DW_STATUS_PARTIAL_BRANCH` with the partial JSON still written.
///
/// # Safety
/// `cfg` must be live; `out_json` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn dw_stokes_branch(
    cfg: *const DwConfig,
    k: u32,
    g: f64,
    eps_max: f64,
    eps_step: f64,
    out_json: *mut *mut c_char,
) -> DwStatus {
    guarded(|| {
        let Some(cfg) = cfg.as_ref() else {
            set_error("null configuration handle");
            return DwStatus::InvalidInput;
        };
        if out_json.is_null() {
            set_error("null output pointer");
            return DwStatus::InvalidInput;
        }
        let problem = match stokes::StokesProblem::new(k, g, cfg.0.clone()) {
            Ok(p) => p,
            Err(e) => {
                set_error(&e.to_string());
                return status_of(&e);
            }
        };
        match problem.continue_branch(eps_max, eps_step) {
            Ok(outcome) => {
                let body = match io::to_json_string(&BranchData::from(&outcome.branch)) {
                    Ok(b) => b,
                    Err(e) => {
                        set_error(&e.to_string());
                        return DwStatus::Numerical;
                    }
                };
                *out_json = CString::new(body).map_or(ptr::null_mut(), CString::into_raw);
                match outcome.failure {
                    None => DwStatus::Ok,
                    Some(e) => {
                        set_error(&e.to_string());
                        DwStatus::PartialBranch
                    }
                }
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}
