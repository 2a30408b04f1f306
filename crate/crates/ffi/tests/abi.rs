use std::ffi::{CStr, CString};
use std::ptr;

use confidence_engine_ffi::*;

const MODEL: &str = "\
variable a : probability
variable b : probability
variable d : difference = a - b
study sa { on a; successes 12; trials 40; }
study sb { on b; successes 20; trials 41; }
";

fn last_error() -> String {
    let p = ce_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn parse(text: &str) -> (CeStatus, *mut CeModel) {
    let text = CString::new(text).unwrap();
    let mut model = ptr::null_mut();
    let status = unsafe { ce_model_parse(text.as_ptr(), &mut model) };
    (status, model)
}

#[test]
fn parse_solve_and_read_back() {
    let (status, model) = parse(MODEL);
    assert_eq!(status, CeStatus::Ok);
    assert!(ce_last_error().is_null());
    unsafe {
        assert_eq!(ce_model_variable_count(model), 3);
        assert_eq!(ce_model_study_count(model), 2);

        let mut report = ptr::null_mut();
        assert_eq!(ce_solve(model, 50, 1e-9, &mut report), CeStatus::Ok);
        assert!(ce_report_converged(report));
        assert!(ce_report_iterations(report) >= 1);

        let name = CString::new("d").unwrap();
        let (mut mean, mut sd) = (f64::NAN, f64::NAN);
        assert_eq!(
            ce_report_natural(report, name.as_ptr(), &mut mean, &mut sd),
            CeStatus::Ok
        );
        assert!(mean < 0.0 && mean > -0.5, "{mean}");
        assert!(sd > 0.0 && sd < 0.2, "{sd}");

        let ghost = CString::new("ghost").unwrap();
        assert_eq!(
            ce_report_natural(report, ghost.as_ptr(), &mut mean, &mut sd),
            CeStatus::InvalidArgument
        );
        assert!(last_error().contains("ghost"));

        let label = CString::new("pair").unwrap();
        let json = ce_report_json(report, label.as_ptr());
        assert!(!json.is_null());
        let text = CStr::from_ptr(json).to_str().unwrap().to_string();
        ce_string_free(json);
        assert!(text.contains("\"model\": \"pair\""), "{text}");

        ce_report_free(report);
        ce_model_free(model);
    }
}

#[test]
fn model_errors_carry_diagnostics() {
    let (status, model) =
        parse("variable p : probability\nstudy s { on q; successes 1; trials 2; }\n");
    assert_eq!(status, CeStatus::ModelError);
    assert!(model.is_null());
    assert!(last_error().starts_with("2:14: error:"));
}

#[test]
fn bad_arguments_are_reported() {
    let mut model = ptr::null_mut();
    assert_eq!(
        unsafe { ce_model_parse(ptr::null(), &mut model) },
        CeStatus::InvalidArgument
    );
    assert!(last_error().contains("null"));

    let (_, model) = parse(MODEL);
    let mut report = ptr::null_mut();
    unsafe {
        assert_eq!(
            ce_solve(model, 0, 1e-9, &mut report),
            CeStatus::InvalidArgument
        );
        assert!(report.is_null());
        assert_eq!(
            ce_solve(ptr::null(), 10, 1e-9, &mut report),
            CeStatus::InvalidArgument
        );
        assert_eq!(
            ce_solve(model, 10, 1e-9, ptr::null_mut()),
            CeStatus::InvalidArgument
        );
        ce_model_free(model);
    }
}

#[test]
fn null_handles_are_harmless() {
    unsafe {
        ce_model_free(ptr::null_mut());
        ce_report_free(ptr::null_mut());
        ce_string_free(ptr::null_mut());
        assert_eq!(ce_model_variable_count(ptr::null()), 0);
        assert!(!ce_report_converged(ptr::null()));
        assert!(ce_report_json(ptr::null(), ptr::null()).is_null());
    }
}

#[test]
fn version_matches_the_package() {
    let v = unsafe { CStr::from_ptr(ce_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/confidence_engine.h");
    for name in [
        "ce_last_error",
        "ce_model_parse",
        "ce_model_free",
        "ce_model_variable_count",
        "ce_model_study_count",
        "ce_solve",
        "ce_report_free",
        "ce_report_converged",
        "ce_report_iterations",
        "ce_report_natural",
        "ce_report_json",
        "ce_string_free",
        "ce_version",
    ] {
        assert!(
            header.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }
}
