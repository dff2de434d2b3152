use std::ffi::{c_char, CStr, CString};
use std::ptr;

use hydropseudo_ffi::*;

fn last_error() -> String {
    let mut needed = 0usize;
    unsafe { hp_last_error(ptr::null_mut(), 0, &mut needed) };
    let mut buf = vec![0 as c_char; needed];
    assert_eq!(unsafe { hp_last_error(buf.as_mut_ptr(), buf.len(), &mut needed) }, HpStatus::Ok);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn run_from_json_and_read_the_report() {
    let json = CString::new(r#"{"mode":"n2-conditions","trials":2,"seed":5}"#).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { hp_config_from_json(json.as_ptr(), &mut cfg) }, HpStatus::Ok);
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { hp_run(cfg, &mut report) }, HpStatus::Ok);

    let mut passed = false;
    let mut count = 0usize;
    unsafe {
        assert_eq!(hp_report_passed(report, &mut passed), HpStatus::Ok);
        assert_eq!(hp_report_suite_count(report, &mut count), HpStatus::Ok);
    }
    assert!(passed);
    assert_eq!(count, 4);
    for k in 0..count {
        let mut r = f64::NAN;
        assert_eq!(unsafe { hp_report_suite_residual(report, k, &mut r) }, HpStatus::Ok);
        assert!(r.is_finite());
    }
    let mut r = 0.0;
    assert_eq!(unsafe { hp_report_suite_residual(report, count, &mut r) }, HpStatus::Dimension);

    let mut needed = 0usize;
    assert_eq!(unsafe { hp_report_json(report, ptr::null_mut(), 0, &mut needed) }, HpStatus::BufferTooSmall);
    let mut buf = vec![0 as c_char; needed];
    assert_eq!(unsafe { hp_report_json(report, buf.as_mut_ptr(), buf.len(), &mut needed) }, HpStatus::Ok);
    let text = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap();
    let v: serde_json::Value = serde_json::from_str(text).unwrap();
    assert_eq!(v["verdict"], "pass");
    assert_eq!(v["config"]["seed"], 5);

    let mut name = [0 as c_char; 64];
    assert_eq!(unsafe { hp_report_suite_name(report, 0, name.as_mut_ptr(), name.len(), ptr::null_mut()) }, HpStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(name.as_ptr()) }.to_str().unwrap(), "n2/closure");
    unsafe {
        hp_report_free(report);
        hp_config_free(cfg);
    }
}

#[test]
fn setters_and_validation() {
    let cfg = hp_config_new();
    unsafe {
        assert_eq!(hp_config_set_mode(cfg, HP_MODE_RATIONAL), HpStatus::Ok);
        assert_eq!(hp_config_set_mode(cfg, 17), HpStatus::Config);
        assert_eq!(hp_config_set_run(cfg, 2, 42, 0), HpStatus::Ok);
        let mut report = ptr::null_mut();
        assert_eq!(hp_run(cfg, &mut report), HpStatus::Config);
        assert!(report.is_null());
        assert!(last_error().contains("trials"));
        assert_eq!(hp_config_set_run(cfg, 2, 42, 1), HpStatus::Ok);
        assert_eq!(hp_run(cfg, &mut report), HpStatus::Ok);
        let mut count = 0usize;
        hp_report_suite_count(report, &mut count);
        assert_eq!(count, 7);
        hp_report_free(report);
        hp_config_free(cfg);
    }
}

#[test]
fn bad_json_and_null_handles() {
    let mut cfg = ptr::null_mut();
    let junk = CString::new("{ nope").unwrap();
    assert_eq!(unsafe { hp_config_from_json(junk.as_ptr(), &mut cfg) }, HpStatus::Config);
    assert!(cfg.is_null());
    assert_eq!(unsafe { hp_config_from_json(ptr::null(), &mut cfg) }, HpStatus::NullPointer);
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { hp_run(ptr::null(), &mut report) }, HpStatus::NullPointer);
    let mut passed = false;
    assert_eq!(unsafe { hp_report_passed(ptr::null(), &mut passed) }, HpStatus::NullPointer);
    unsafe {
        hp_config_free(ptr::null_mut());
        hp_report_free(ptr::null_mut());
        hp_theta_free(ptr::null_mut());
    }
}

#[test]
fn theta_through_the_boundary() {
    let mut ctx = ptr::null_mut();
    assert_eq!(unsafe { hp_theta_new(0.0, 1.0, &mut ctx) }, HpStatus::Ok);
    let mut at_zero = [1.0, 1.0];
    let mut slope = [0.0, 0.0];
    assert_eq!(unsafe { hp_theta_eval(ctx, 0.0, 0.0, &mut at_zero, &mut slope) }, HpStatus::Ok);
    assert!(at_zero[0].hypot(at_zero[1]) < 1e-15);
    assert!(slope[0].hypot(slope[1]) > 1.0);
    let (mut a, mut b) = ([0.0; 2], [0.0; 2]);
    unsafe {
        hp_theta_eval(ctx, 0.31, 0.2, &mut a, ptr::null_mut());
        hp_theta_eval(ctx, 1.31, 0.2, &mut b, ptr::null_mut());
    }
    assert!((a[0] - b[0]).hypot(a[1] - b[1]) < 1e-12);
    unsafe { hp_theta_free(ctx) };

    let mut bad = ptr::null_mut();
    assert_eq!(unsafe { hp_theta_new(0.0, 0.1, &mut bad) }, HpStatus::Config);
    assert!(bad.is_null());
}

#[test]
fn connection_matrix_matches_the_library() {
    let u = [1.7, 2.4, 3.3];
    let s = [0.3, -0.6, 1.2, 0.4, -0.9];
    let (mut re, mut im) = ([0.0; 16], [0.0; 16]);
    let status = unsafe { hp_connection_matrix(u.as_ptr(), 3, s.as_ptr(), 5, 1, re.as_mut_ptr(), im.as_mut_ptr(), 16) };
    assert_eq!(status, HpStatus::Ok);
    let point = hydropseudo::rational::ChamberPoint::new(u.to_vec()).unwrap();
    let exps = hydropseudo::rational::ExponentVector::new(s.to_vec());
    let m = hydropseudo::rational::connection_matrix(&point, &exps, 1).unwrap();
    for (k, z) in m.iter().enumerate() {
        assert_eq!((re[k], im[k]), (z.re, z.im));
    }
    let short = unsafe { hp_connection_matrix(u.as_ptr(), 3, s.as_ptr(), 5, 1, re.as_mut_ptr(), im.as_mut_ptr(), 15) };
    assert_eq!(short, HpStatus::BufferTooSmall);
    let outside = [0.5, 2.0, 3.0];
    let st = unsafe { hp_connection_matrix(outside.as_ptr(), 3, s.as_ptr(), 5, 0, re.as_mut_ptr(), im.as_mut_ptr(), 16) };
    assert_eq!(st, HpStatus::Domain);
    let st = unsafe { hp_connection_matrix(u.as_ptr(), 3, s.as_ptr(), 4, 0, re.as_mut_ptr(), im.as_mut_ptr(), 16) };
    assert_eq!(st, HpStatus::Dimension);
    let st = unsafe { hp_connection_matrix(u.as_ptr(), 3, s.as_ptr(), 5, 3, re.as_mut_ptr(), im.as_mut_ptr(), 16) };
    assert_eq!(st, HpStatus::Dimension);
}
