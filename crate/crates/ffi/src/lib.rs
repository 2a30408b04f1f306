//! C interface to the solver.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free` function. Every fallible call returns a
//! [`CeStatus`]; on failure [`ce_last_error`] describes what went wrong on
//! the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use confidence_engine::cli::report_to_json;
use confidence_engine::dsl;
use confidence_engine::model::CompiledModel;
use confidence_engine::solver::{solve, SolveError, SolveOptions, SolveReport};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CeStatus {
    Ok = 0,
    ModelError = 1,
    NumericError = 2,
    InvalidArgument = 3,
    Panic = 4,
}

/// A parsed and checked model.
pub struct CeModel {
    inner: CompiledModel,
}

/// The result of solving a model.
pub struct CeReport {
    inner: SolveReport,
    options: SolveOptions,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn guard(f: impl FnOnce() -> Result<(), (CeStatus, String)>) -> CeStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CeStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CeStatus::Panic
        }
    }
}

fn invalid(msg: &str) -> (CeStatus, String) {
    (CeStatus::InvalidArgument, msg.to_string())
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (CeStatus, String)> {
    if p.is_null() {
        return Err(invalid(&format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(&format!("{what} is not UTF-8")))
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ce_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses model text. On success `*out` receives a new handle.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ce_model_parse(text: *const c_char, out: *mut *mut CeModel) -> CeStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        *out = ptr::null_mut();
        let text = read_str(text, "text")?;
        let model = dsl::load(text).map_err(|diags| {
            let lines: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
            (CeStatus::ModelError, lines.join("\n"))
        })?;
        *out = Box::into_raw(Box::new(CeModel { inner: model }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`ce_model_parse`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ce_model_free(model: *mut CeModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of model variables, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ce_model_variable_count(model: *const CeModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.variables().len())
}

/// Number of study arms, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ce_model_study_count(model: *const CeModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.evidence().len())
}

/// Solves `model`. Non-convergence is not an error; see
/// [`ce_report_converged`].
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ce_solve(
    model: *const CeModel,
    max_iters: u32,
    tol: f64,
    out: *mut *mut CeReport,
) -> CeStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        *out = ptr::null_mut();
        let model = model.as_ref().ok_or_else(|| invalid("model is null"))?;
        let options = SolveOptions {
            max_iters: max_iters as usize,
            tol,
        };
        let report = solve(&model.inner, &options).map_err(|e| {
            let status = match e {
                SolveError::Options(_) => CeStatus::InvalidArgument,
                _ => CeStatus::NumericError,
            };
            (status, e.to_string())
        })?;
        *out = Box::into_raw(Box::new(CeReport {
            inner: report,
            options,
        }));
        Ok(())
    })
}

/// # Safety
/// `report` must come from [`ce_solve`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ce_report_free(report: *mut CeReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ce_report_converged(report: *const CeReport) -> bool {
    report.as_ref().is_some_and(|r| r.inner.converged)
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ce_report_iterations(report: *const CeReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.iters_used)
}

/// Delta-method natural-scale posterior mean and sd of one variable.
///
/// # Safety
/// `report` must be a live handle, `name` NUL-terminated, and `mean`/`sd`
/// valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ce_report_natural(
    report: *const CeReport,
    name: *const c_char,
    mean: *mut f64,
    sd: *mut f64,
) -> CeStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| invalid("report is null"))?;
        if mean.is_null() || sd.is_null() {
            return Err(invalid("output pointer is null"));
        }
        let name = read_str(name, "name")?;
        let s = report
            .inner
            .summary(name)
            .ok_or_else(|| invalid(&format!("no variable named `{name}`")))?;
        *mean = s.natural_mean_delta;
        *sd = s.natural_sd_delta;
        Ok(())
    })
}

/// The report as JSON. Free the result with [`ce_string_free`]; null on
/// failure.
///
/// # Safety
/// `report` must be null or a live handle; `model_name` null or
/// NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ce_report_json(
    report: *const CeReport,
    model_name: *const c_char,
) -> *mut c_char {
    let mut result = ptr::null_mut();
    guard(|| {
        let report = report.as_ref().ok_or_else(|| invalid("report is null"))?;
        let name = if model_name.is_null() {
            ""
        } else {
            read_str(model_name, "model_name")?
        };
        let json = report_to_json(name, &report.options, &report.inner);
        result = CString::new(json)
            .map_err(|_| invalid("report contains NUL"))?
            .into_raw();
        Ok(())
    });
    result
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn ce_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ce_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
