//! C ABI for the swellfront solvers and verifier.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free` function. Every fallible function returns an
//! [`SfStatus`]; on failure [`sf_last_error`] gives a message for the calling
//! thread. No function unwinds across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use swellfront::config::RunConfig;
use swellfront::harness::{execute, RunOptions};
use swellfront::{validate_assumptions, Error, RunResult, SolverKind};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed problem file or scheme settings.
    ConfigError = 3,
    /// The instance violates a standing assumption.
    InvalidInstance = 4,
    /// Front collapse, boundary solve failure or another solver error.
    SolverError = 5,
    /// Destination buffer too small or unknown enum value.
    OutOfRange = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfSolver {
    Frontfix = 0,
    Oracle = 1,
}

/// Per-step series stored in a run result.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfSeries {
    Times = 0,
    Fronts = 1,
    Speeds = 2,
    UAtA = 3,
    UAtS = 4,
    Inflow = 5,
}

/// A parsed problem file.
pub struct SfInstance {
    config: RunConfig,
}

/// The trajectory of one run.
pub struct SfRunResult {
    result: RunResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(err: &Error) -> SfStatus {
    match err {
        Error::Config(_) | Error::InvalidParameter(_) | Error::Io(_) | Error::Json(_) => {
            SfStatus::ConfigError
        }
        Error::InvalidInstance(_) | Error::AssumptionViolation(_) | Error::NoInverse { .. } => {
            SfStatus::InvalidInstance
        }
        _ => SfStatus::SolverError,
    }
}

fn guard(f: impl FnOnce() -> Result<(), SfStatus>) -> SfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SfStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic");
            SfStatus::Panic
        }
    }
}

fn fail(err: Error) -> SfStatus {
    set_error(err.to_string());
    status_of(&err)
}

fn null(what: &str) -> SfStatus {
    set_error(format!("{what} is null"));
    SfStatus::NullPointer
}

/// Message of the last failed call on this thread (or of the last failed
/// validation or verification), or an empty string. The pointer stays valid
/// until the next call on the same thread.
#[no_mangle]
pub extern "C" fn sf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a TOML problem file.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sf_instance_from_toml(
    text: *const c_char,
    out: *mut *mut SfInstance,
) -> SfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text).to_str().map_err(|e| {
            set_error(e.to_string());
            SfStatus::InvalidUtf8
        })?;
        let config = RunConfig::parse(text).map_err(fail)?;
        *out = Box::into_raw(Box::new(SfInstance { config }));
        Ok(())
    })
}

/// # Safety
/// `instance` must come from [`sf_instance_from_toml`] and not be used
/// afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sf_instance_free(instance: *mut SfInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Checks the standing assumptions; writes whether all of them hold.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_instance_validate(
    instance: *const SfInstance,
    all_pass: *mut bool,
) -> SfStatus {
    guard(|| {
        let inst = instance.as_ref().ok_or_else(|| null("instance"))?;
        let out = all_pass.as_mut().ok_or_else(|| null("all_pass"))?;
        let report = validate_assumptions(&inst.config.instance);
        *out = report.all_pass();
        if !report.all_pass() {
            set_error(report.to_string());
        }
        Ok(())
    })
}

/// Runs a solver with the instance's scheme settings.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_run(
    instance: *const SfInstance,
    solver: SfSolver,
    allow_invalid: bool,
    out: *mut *mut SfRunResult,
) -> SfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let inst = instance.as_ref().ok_or_else(|| null("instance"))?;
        let opts = RunOptions {
            solver: match solver {
                SfSolver::Frontfix => SolverKind::Frontfix,
                SfSolver::Oracle => SolverKind::Oracle,
            },
            stride: None,
            allow_invalid,
        };
        let result = execute(&inst.config, &opts).map_err(fail)?;
        *out = Box::into_raw(Box::new(SfRunResult { result }));
        Ok(())
    })
}

/// # Safety
/// `result` must come from [`sf_run`] and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn sf_result_free(result: *mut SfRunResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Number of time levels, including `t = 0`. Zero for null.
///
/// # Safety
/// `result` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn sf_result_len(result: *const SfRunResult) -> usize {
    result.as_ref().map_or(0, |r| r.result.len())
}

/// Front position at the final time.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_result_final_front(
    result: *const SfRunResult,
    out: *mut f64,
) -> SfStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = r.result.final_front();
        Ok(())
    })
}

/// Copies one per-step series into `buf`, which must hold at least
/// [`sf_result_len`] values.
///
/// # Safety
/// `buf` must be valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn sf_result_copy_series(
    result: *const SfRunResult,
    series: SfSeries,
    buf: *mut f64,
    capacity: usize,
) -> SfStatus {
    guard(|| {
        let r = &result.as_ref().ok_or_else(|| null("result"))?.result;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let src = match series {
            SfSeries::Times => &r.times,
            SfSeries::Fronts => &r.fronts,
            SfSeries::Speeds => &r.speeds,
            SfSeries::UAtA => &r.u_at_a,
            SfSeries::UAtS => &r.u_at_s,
            SfSeries::Inflow => &r.inflow,
        };
        if capacity < src.len() {
            set_error(format!("buffer holds {capacity} values, need {}", src.len()));
            return Err(SfStatus::OutOfRange);
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
        Ok(())
    })
}

/// Runs the single-run verifier; writes whether every check passed.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_result_verify(
    result: *const SfRunResult,
    instance: *const SfInstance,
    pass: *mut bool,
) -> SfStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let inst = instance.as_ref().ok_or_else(|| null("instance"))?;
        let out = pass.as_mut().ok_or_else(|| null("pass"))?;
        let report = swellfront::verify::verify(&r.result, &inst.config.instance).map_err(fail)?;
        *out = report.overall_pass;
        if !report.overall_pass {
            set_error(format!("failing checks: {}", report.failing().join(", ")));
        }
        Ok(())
    })
}
