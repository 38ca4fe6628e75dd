//! C ABI over `argstab`.
//!
//! Every handle is opaque and owned by the caller once returned; release it
//! with the matching `*_free`. Functions return an [`ArgstabStatus`] and write
//! results through out-pointers. After a failure,
//! [`argstab_last_error_message`] describes it on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use argstab::config::{AnalysisConfig, DeviceSource};
use argstab::pipeline::analyze_table;
use argstab::report::{StabilityReport, Verdict};
use argstab::sweep::{sweep, FrequencyResponseTable};
use argstab::trajectory::Form;
use argstab::{table_io, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgstabStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Config = 3,
    MalformedTable = 4,
    /// The crossing sequence could not be turned into a verdict.
    Analysis = 5,
    Io = 6,
    /// The report has no critical pole to return.
    NoCriticalPole = 7,
    InvalidArgument = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgstabForm {
    Admittance = 0,
    Impedance = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArgstabVerdict {
    Stable = 0,
    Unstable = 1,
    Marginal = 2,
}

pub struct ArgstabConfig(AnalysisConfig);

pub struct ArgstabTable(FrequencyResponseTable);

pub struct ArgstabReport(StabilityReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> ArgstabStatus {
    match e {
        Error::Config(_) => ArgstabStatus::Config,
        Error::MalformedTable(_) => ArgstabStatus::MalformedTable,
        Error::Io(_) => ArgstabStatus::Io,
        _ => ArgstabStatus::Analysis,
    }
}

struct Fail(ArgstabStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ArgstabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ArgstabStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ArgstabStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(ArgstabStatus::NullArgument, format!("{what} is null"))
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(ArgstabStatus::InvalidUtf8, format!("{what} is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<T>(p: *mut *mut T, value: T) -> Result<(), Fail> {
    if p.is_null() {
        return Err(null("output pointer"));
    }
    *p = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn argstab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn argstab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `path` must be a NUL-terminated string and `out_config` writable.
#[no_mangle]
pub unsafe extern "C" fn argstab_config_load(
    path: *const c_char,
    out_config: *mut *mut ArgstabConfig,
) -> ArgstabStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        let c =
            AnalysisConfig::load(&path).map_err(|e| Fail(ArgstabStatus::Config, e.to_string()))?;
        out(out_config, ArgstabConfig(c))
    })
}

/// # Safety
/// `config` must come from [`argstab_config_load`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn argstab_config_free(config: *mut ArgstabConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Reads a CSV or JSON response table, chosen by extension.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_table` writable.
#[no_mangle]
pub unsafe extern "C" fn argstab_table_load(
    path: *const c_char,
    out_table: *mut *mut ArgstabTable,
) -> ArgstabStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        let t = table_io::load(&path).map_err(|e| match e {
            Error::Io(io) => Fail(
                ArgstabStatus::MalformedTable,
                format!("{}: {io}", path.display()),
            ),
            other => other.into(),
        })?;
        t.check_spans_axis()?;
        out(out_table, ArgstabTable(t))
    })
}

/// # Safety
/// `table` must be a live table handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn argstab_table_save(
    table: *const ArgstabTable,
    path: *const c_char,
) -> ArgstabStatus {
    guard(|| {
        let t = handle(table, "table")?;
        let path = path_arg(path, "path")?;
        table_io::save(&t.0, &path)?;
        Ok(())
    })
}

/// Number of frequency rows, 0 for NULL.
///
/// # Safety
/// `table` must be a live table handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn argstab_table_len(table: *const ArgstabTable) -> usize {
    table.as_ref().map_or(0, |t| t.0.len())
}

/// # Safety
/// `table` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn argstab_table_free(table: *mut ArgstabTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Simulated sweep of the configuration's closed-form device. A negative
/// `noise` keeps the configured value.
///
/// # Safety
/// `config` must be a live handle and `out_table` writable.
#[no_mangle]
pub unsafe extern "C" fn argstab_sweep(
    config: *const ArgstabConfig,
    noise: f64,
    seed: u64,
    out_table: *mut *mut ArgstabTable,
) -> ArgstabStatus {
    guard(|| {
        let c = &handle(config, "config")?.0;
        let grid = c.grid_params();
        let device = match c.pick_device(None)?.resolve(&grid)? {
            DeviceSource::Closed(m) => m,
            DeviceSource::Table(p) => {
                return Err(Fail(
                    ArgstabStatus::Config,
                    format!(
                        "{} is a measured table; a closed-form device is required",
                        p.display()
                    ),
                ))
            }
        };
        let mut opts = c.sweep_options();
        if noise.is_nan() {
            return Err(Fail(ArgstabStatus::InvalidArgument, "noise is NaN".into()));
        }
        if noise >= 0.0 {
            opts.noise = noise;
        }
        opts.seed = seed;
        out(
            out_table,
            ArgstabTable(sweep(&device, &c.frequency_plan(), &opts)?),
        )
    })
}

/// # Safety
/// `config` and `table` must be live handles and `out_report` writable.
#[no_mangle]
pub unsafe extern "C" fn argstab_analyze(
    config: *const ArgstabConfig,
    table: *const ArgstabTable,
    form: ArgstabForm,
    out_report: *mut *mut ArgstabReport,
) -> ArgstabStatus {
    guard(|| {
        let c = &handle(config, "config")?.0;
        let t = &handle(table, "table")?.0;
        let form = match form {
            ArgstabForm::Admittance => Form::Admittance,
            ArgstabForm::Impedance => Form::Impedance,
        };
        let a = analyze_table(&c.grid_params(), t, form, &c.analysis.options())?;
        out(
            out_report,
            ArgstabReport(StabilityReport::from_analysis(&a)),
        )
    })
}

/// # Safety
/// `report` must be a live handle and both out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn argstab_report_verdict(
    report: *const ArgstabReport,
    out_verdict: *mut ArgstabVerdict,
    out_winding: *mut i64,
) -> ArgstabStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        if out_verdict.is_null() || out_winding.is_null() {
            return Err(null("output pointer"));
        }
        *out_verdict = match r.verdict {
            Verdict::Stable => ArgstabVerdict::Stable,
            Verdict::Unstable => ArgstabVerdict::Unstable,
            Verdict::Marginal => ArgstabVerdict::Marginal,
        };
        *out_winding = r.winding;
        Ok(())
    })
}

/// Estimated critical pole `sigma + j omega` (1/s, rad/s). Returns
/// `NoCriticalPole` when no imaginary-part crossing was found.
///
/// # Safety
/// `report` must be a live handle and both out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn argstab_report_critical_pole(
    report: *const ArgstabReport,
    out_sigma: *mut f64,
    out_omega: *mut f64,
) -> ArgstabStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        if out_sigma.is_null() || out_omega.is_null() {
            return Err(null("output pointer"));
        }
        let c = r.critical_pole.as_ref().ok_or_else(|| {
            Fail(
                ArgstabStatus::NoCriticalPole,
                "no critical pole in this report".into(),
            )
        })?;
        *out_sigma = c.sigma_o;
        *out_omega = c.omega_o_rad_s;
        Ok(())
    })
}

/// Full report as JSON. Free the string with [`argstab_string_free`].
///
/// # Safety
/// `report` must be a live handle and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn argstab_report_json(
    report: *const ArgstabReport,
    out_json: *mut *mut c_char,
) -> ArgstabStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        if out_json.is_null() {
            return Err(null("output pointer"));
        }
        let s =
            serde_json::to_string(r).map_err(|e| Fail(ArgstabStatus::Analysis, e.to_string()))?;
        *out_json = CString::new(s).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// # Safety
/// `report` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn argstab_report_free(report: *mut ArgstabReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn argstab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Damping from `Re D` at an exact imaginary-part zero and the local slope
/// `a = dIm/dw`, `b = -dRe/dw`. NaN when the slope vanishes.
#[no_mangle]
pub extern "C" fn argstab_sigma_from_crossing(re_d: f64, a: f64, b: f64) -> f64 {
    if a * a + b * b == 0.0 {
        return f64::NAN;
    }
    argstab::critical::sigma_from_crossing(re_d, a, b)
}
