//! C interface: opaque handles for run configurations, reports and theta
//! contexts, plus direct access to the rational connection matrices.
//!
//! Every fallible function returns an [`HpStatus`]; on failure a description
//! is kept per thread and can be read with [`hp_last_error`]. Handles are
//! created by `*_new`/`*_from_json`/[`hp_run`] and released by the matching
//! `*_free`, which accepts null.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hydropseudo::elliptic::ThetaCtx;
use hydropseudo::rational::{self, ChamberPoint, ExponentVector};
use hydropseudo::verifier::{self, Mode, Report, RunConfig, Verdict};
use hydropseudo::Error;
use num_complex::Complex64;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Rejected configuration, JSON or modular parameter.
    Config = 3,
    /// Lengths or indices that do not fit together.
    Dimension = 4,
    /// Input outside the domain: chamber, lattice, poles, branch cut.
    Domain = 5,
    /// Numerical breakdown: step underflow, singular block, rank loss.
    Numerical = 6,
    /// Output buffer shorter than required; the required size is reported.
    BufferTooSmall = 7,
    /// A Rust panic was caught at the boundary.
    Panic = 8,
}

/// Suite selection for [`hp_config_set_mode`].
pub const HP_MODE_RATIONAL: u32 = 0;
pub const HP_MODE_ELLIPTIC: u32 = 1;
pub const HP_MODE_N2_CONDITIONS: u32 = 2;
pub const HP_MODE_ALL: u32 = 3;

/// Opaque run configuration.
pub struct HpConfig(RunConfig);

/// Opaque verification report.
pub struct HpReport(Report);

/// Opaque theta-function context.
pub struct HpTheta(ThetaCtx);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn remember(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> HpStatus {
    match err {
        Error::Config(_) | Error::TruncationUnreachable { .. } => HpStatus::Config,
        Error::Dimension(_) | Error::IndexOutOfRange { .. } | Error::DuplicateNode(_) => HpStatus::Dimension,
        Error::ChamberViolation(_)
        | Error::BranchCut(_)
        | Error::SingularSample(_)
        | Error::PoleContact(_)
        | Error::InvalidEllipticPoint(_)
        | Error::InvalidJet(_)
        | Error::MovableSingularity(_) => HpStatus::Domain,
        Error::StepUnderflow { .. }
        | Error::SingularTimeBlock { .. }
        | Error::RankDeficient { .. }
        | Error::VanishingDenominator(_) => HpStatus::Numerical,
    }
}

fn fail(status: HpStatus, msg: impl Into<String>) -> HpStatus {
    remember(msg);
    status
}

fn from_error(err: Error) -> HpStatus {
    fail(status_of(&err), err.to_string())
}

/// Runs `body`, turning panics into [`HpStatus::Panic`].
fn guard(body: impl FnOnce() -> HpStatus) -> HpStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(s) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(HpStatus::Panic, msg)
        }
    }
}

/// Copies `text` plus a terminating NUL into `buf` when it fits. A short
/// buffer leaves the last error untouched so that it can itself be sized.
unsafe fn write_c_string(text: &str, buf: *mut c_char, capacity: usize, needed: *mut usize) -> HpStatus {
    let len = text.len() + 1;
    if !needed.is_null() {
        *needed = len;
    }
    if buf.is_null() || capacity < len {
        return HpStatus::BufferTooSmall;
    }
    ptr::copy_nonoverlapping(text.as_ptr(), buf.cast::<u8>(), text.len());
    *buf.add(text.len()) = 0;
    HpStatus::Ok
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the most recent failure on this thread.
///
/// # Safety
/// `buf` must be null or point to `capacity` writable bytes; `needed` must be
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn hp_last_error(buf: *mut c_char, capacity: usize, needed: *mut usize) -> HpStatus {
    let text = LAST_ERROR.with(|e| e.borrow().clone());
    write_c_string(&text, buf, capacity, needed)
}

/// Default configuration: all suites, `n = 3`, seed 42, three trials.
#[no_mangle]
pub extern "C" fn hp_config_new() -> *mut HpConfig {
    Box::into_raw(Box::new(HpConfig(RunConfig::default())))
}

/// Parses and validates a JSON configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_config_from_json(json: *const c_char, out: *mut *mut HpConfig) -> HpStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(HpStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            return fail(HpStatus::InvalidUtf8, "configuration is not UTF-8");
        };
        match RunConfig::from_json(text) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(HpConfig(cfg)));
                HpStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `cfg` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hp_config_free(cfg: *mut HpConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Selects the suites; `mode` is one of the `HP_MODE_*` constants.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hp_config_set_mode(cfg: *mut HpConfig, mode: u32) -> HpStatus {
    let Some(cfg) = cfg.as_mut() else {
        return fail(HpStatus::NullPointer, "null configuration");
    };
    cfg.0.mode = match mode {
        HP_MODE_RATIONAL => Mode::Rational,
        HP_MODE_ELLIPTIC => Mode::Elliptic,
        HP_MODE_N2_CONDITIONS => Mode::N2Conditions,
        HP_MODE_ALL => Mode::All,
        other => return fail(HpStatus::Config, format!("unknown mode {other}")),
    };
    HpStatus::Ok
}

/// Sets the component count, seed and trial count; validated by [`hp_run`].
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hp_config_set_run(cfg: *mut HpConfig, n: usize, seed: u64, trials: usize) -> HpStatus {
    let Some(cfg) = cfg.as_mut() else {
        return fail(HpStatus::NullPointer, "null configuration");
    };
    cfg.0.n = n;
    cfg.0.seed = seed;
    cfg.0.trials = trials;
    HpStatus::Ok
}

/// Runs the selected suites; `*out` receives a report handle on success.
///
/// # Safety
/// `cfg` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hp_run(cfg: *const HpConfig, out: *mut *mut HpReport) -> HpStatus {
    guard(|| {
        let Some(cfg) = cfg.as_ref() else {
            return fail(HpStatus::NullPointer, "null configuration");
        };
        if out.is_null() {
            return fail(HpStatus::NullPointer, "null output");
        }
        *out = ptr::null_mut();
        match verifier::run(&cfg.0) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(HpReport(r)));
                HpStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `report` must be null or a handle from [`hp_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hp_report_free(report: *mut HpReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// `*passed` becomes true iff every suite stayed below its tolerance.
///
/// # Safety
/// `report` must be a live handle and `passed` writable.
#[no_mangle]
pub unsafe extern "C" fn hp_report_passed(report: *const HpReport, passed: *mut bool) -> HpStatus {
    match (report.as_ref(), passed.is_null()) {
        (Some(r), false) => {
            *passed = r.0.verdict == Verdict::Pass;
            HpStatus::Ok
        }
        _ => fail(HpStatus::NullPointer, "null argument"),
    }
}

/// Number of suite records.
///
/// # Safety
/// `report` must be a live handle and `count` writable.
#[no_mangle]
pub unsafe extern "C" fn hp_report_suite_count(report: *const HpReport, count: *mut usize) -> HpStatus {
    match (report.as_ref(), count.is_null()) {
        (Some(r), false) => {
            *count = r.0.suites.len();
            HpStatus::Ok
        }
        _ => fail(HpStatus::NullPointer, "null argument"),
    }
}

/// Largest residual of suite `index` (ordered by name); NaN if the suite errored.
///
/// # Safety
/// `report` must be a live handle and `residual` writable.
#[no_mangle]
pub unsafe extern "C" fn hp_report_suite_residual(report: *const HpReport, index: usize, residual: *mut f64) -> HpStatus {
    let (Some(r), false) = (report.as_ref(), residual.is_null()) else {
        return fail(HpStatus::NullPointer, "null argument");
    };
    match r.0.suites.get(index) {
        Some(s) => {
            *residual = s.max_residual.unwrap_or(f64::NAN);
            HpStatus::Ok
        }
        None => fail(HpStatus::Dimension, format!("suite {index} of {}", r.0.suites.len())),
    }
}

/// Name of suite `index` into `buf`; see [`hp_report_json`] for the sizing protocol.
///
/// # Safety
/// As for [`hp_report_json`].
#[no_mangle]
pub unsafe extern "C" fn hp_report_suite_name(
    report: *const HpReport,
    index: usize,
    buf: *mut c_char,
    capacity: usize,
    needed: *mut usize,
) -> HpStatus {
    let Some(r) = report.as_ref() else {
        return fail(HpStatus::NullPointer, "null report");
    };
    match r.0.suites.get(index) {
        Some(s) => write_c_string(&s.name, buf, capacity, needed),
        None => fail(HpStatus::Dimension, format!("suite {index} of {}", r.0.suites.len())),
    }
}

/// JSON report into `buf`. `*needed` always receives the size including the
/// NUL; pass a null `buf` to query it.
///
/// # Safety
/// `report` must be a live handle; `buf` null or `capacity` writable bytes;
/// `needed` null or writable.
#[no_mangle]
pub unsafe extern "C" fn hp_report_json(report: *const HpReport, buf: *mut c_char, capacity: usize, needed: *mut usize) -> HpStatus {
    let Some(r) = report.as_ref() else {
        return fail(HpStatus::NullPointer, "null report");
    };
    write_c_string(&r.0.to_json(), buf, capacity, needed)
}

/// Theta context for `tau = tau_re + i tau_im` with automatic truncation.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_theta_new(tau_re: f64, tau_im: f64, out: *mut *mut HpTheta) -> HpStatus {
    if out.is_null() {
        return fail(HpStatus::NullPointer, "null output");
    }
    *out = ptr::null_mut();
    match ThetaCtx::new(Complex64::new(tau_re, tau_im)) {
        Ok(ctx) => {
            *out = Box::into_raw(Box::new(HpTheta(ctx)));
            HpStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// # Safety
/// `ctx` must be null or a handle from [`hp_theta_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hp_theta_free(ctx: *mut HpTheta) {
    if !ctx.is_null() {
        drop(Box::from_raw(ctx));
    }
}

/// `theta(z)` and `theta'(z)`; either output pair may be null.
///
/// # Safety
/// `ctx` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_theta_eval(
    ctx: *const HpTheta,
    z_re: f64,
    z_im: f64,
    value: *mut [f64; 2],
    derivative: *mut [f64; 2],
) -> HpStatus {
    let Some(ctx) = ctx.as_ref() else {
        return fail(HpStatus::NullPointer, "null context");
    };
    let (v, d) = ctx.0.theta_with_derivative(Complex64::new(z_re, z_im));
    if let Some(out) = value.as_mut() {
        *out = [v.re, v.im];
    }
    if let Some(out) = derivative.as_mut() {
        *out = [d.re, d.im];
    }
    HpStatus::Ok
}

/// Connection matrix `M_i` for the chamber point `u[0..n]` and exponents
/// `s[0..n+2]`, written column-major as `(n+1)^2` real and imaginary parts.
///
/// # Safety
/// `u` must hold `n` values, `s` must hold `s_len`; `re_out` and `im_out`
/// must each hold `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn hp_connection_matrix(
    u: *const f64,
    n: usize,
    s: *const f64,
    s_len: usize,
    i: usize,
    re_out: *mut f64,
    im_out: *mut f64,
    capacity: usize,
) -> HpStatus {
    guard(|| {
        if u.is_null() || s.is_null() || re_out.is_null() || im_out.is_null() {
            return fail(HpStatus::NullPointer, "null argument");
        }
        let size = (n + 1) * (n + 1);
        if capacity < size {
            return fail(HpStatus::BufferTooSmall, format!("need {size} entries, have {capacity}"));
        }
        let point = match ChamberPoint::new(std::slice::from_raw_parts(u, n).to_vec()) {
            Ok(p) => p,
            Err(e) => return from_error(e),
        };
        let exps = ExponentVector::new(std::slice::from_raw_parts(s, s_len).to_vec());
        match rational::connection_matrix(&point, &exps, i) {
            Ok(m) => {
                for (k, z) in m.iter().enumerate() {
                    *re_out.add(k) = z.re;
                    *im_out.add(k) = z.im;
                }
                HpStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
