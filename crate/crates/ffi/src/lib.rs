//! C interface to the experiment runner.
//!
//! Handles are opaque. Every function returns a [`CmcgStatus`]; on failure the
//! message is available from [`cmcg_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use cmcg_core::experiment::{self, exit_code, ExperimentConfig, RunSummary, SolverKind};
use cmcg_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmcgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Solver = 4,
    NotRun = 5,
    OutOfRange = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmcgSolver {
    Cmcg = 0,
    Fw = 1,
    Fs = 2,
}

impl From<CmcgSolver> for SolverKind {
    fn from(s: CmcgSolver) -> Self {
        match s {
            CmcgSolver::Cmcg => SolverKind::Cmcg,
            CmcgSolver::Fw => SolverKind::Fw,
            CmcgSolver::Fs => SolverKind::Fs,
        }
    }
}

/// A configured experiment and, after a run, its results.
pub struct CmcgExperiment {
    config: ExperimentConfig,
    summary: Option<RunSummary>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: CmcgStatus, msg: impl Into<String>) -> CmcgStatus {
    set_error(msg);
    status
}

fn from_core(e: &Error) -> CmcgStatus {
    let status = if exit_code(e) == 1 { CmcgStatus::Config } else { CmcgStatus::Solver };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> CmcgStatus) -> CmcgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(CmcgStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, CmcgStatus> {
    if p.is_null() {
        return Err(fail(CmcgStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(CmcgStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a>(h: *const CmcgExperiment) -> Result<&'a CmcgExperiment, CmcgStatus> {
    h.as_ref().ok_or_else(|| fail(CmcgStatus::NullPointer, "experiment handle is null"))
}

unsafe fn handle_mut<'a>(h: *mut CmcgExperiment) -> Result<&'a mut CmcgExperiment, CmcgStatus> {
    h.as_mut().ok_or_else(|| fail(CmcgStatus::NullPointer, "experiment handle is null"))
}

fn summary(h: &CmcgExperiment) -> Result<&RunSummary, CmcgStatus> {
    h.summary.as_ref().ok_or_else(|| fail(CmcgStatus::NotRun, "experiment has not been run"))
}

unsafe fn emit(out: *mut *mut CmcgExperiment, config: ExperimentConfig) -> CmcgStatus {
    *out = Box::into_raw(Box::new(CmcgExperiment { config, summary: None }));
    CmcgStatus::Ok
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn cmcg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn cmcg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a JSON experiment configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cmcg_experiment_from_json(json: *const c_char, out: *mut *mut CmcgExperiment) -> CmcgStatus {
    guard(|| {
        if out.is_null() {
            return fail(CmcgStatus::NullPointer, "output pointer is null");
        }
        let text = tri!(str_arg(json, "json"));
        match ExperimentConfig::from_json(text) {
            Ok(c) => emit(out, c),
            Err(e) => from_core(&e),
        }
    })
}

/// Creates an experiment from a preset name.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cmcg_experiment_from_preset(name: *const c_char, out: *mut *mut CmcgExperiment) -> CmcgStatus {
    guard(|| {
        if out.is_null() {
            return fail(CmcgStatus::NullPointer, "output pointer is null");
        }
        let name = tri!(str_arg(name, "name"));
        match experiment::preset(name) {
            Some(c) => emit(out, c),
            None => fail(CmcgStatus::InvalidArgument, format!("unknown preset {name:?}")),
        }
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `h` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cmcg_experiment_free(h: *mut CmcgExperiment) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// `h` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn cmcg_experiment_set_solver(h: *mut CmcgExperiment, solver: CmcgSolver) -> CmcgStatus {
    guard(|| {
        let h = tri!(handle_mut(h));
        h.config.solver = solver.into();
        h.summary = None;
        CmcgStatus::Ok
    })
}

/// # Safety
/// `h` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn cmcg_experiment_set_max_periods(h: *mut CmcgExperiment, periods: usize) -> CmcgStatus {
    guard(|| {
        let h = tri!(handle_mut(h));
        h.config.max_periods = periods;
        h.summary = None;
        CmcgStatus::Ok
    })
}

/// # Safety
/// `h` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn cmcg_experiment_set_tolerance(h: *mut CmcgExperiment, tolerance: c_double) -> CmcgStatus {
    guard(|| {
        let h = tri!(handle_mut(h));
        h.config.tolerance = tolerance;
        h.summary = None;
        CmcgStatus::Ok
    })
}

/// Configuration as JSON; free with [`cmcg_string_free`].
///
/// # Safety
/// `h` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cmcg_experiment_config_json(h: *const CmcgExperiment, out: *mut *mut c_char) -> CmcgStatus {
    guard(|| {
        let h = tri!(handle(h));
        if out.is_null() {
            return fail(CmcgStatus::NullPointer, "output pointer is null");
        }
        *out = CString::new(h.config.to_json()).unwrap_or_default().into_raw();
        CmcgStatus::Ok
    })
}

/// Runs the experiment, writing its output files into `output_dir`.
///
/// # Safety
/// `h` must be a valid handle and `output_dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cmcg_experiment_run(h: *mut CmcgExperiment, output_dir: *const c_char) -> CmcgStatus {
    guard(|| {
        let h = tri!(handle_mut(h));
        let dir = PathBuf::from(tri!(str_arg(output_dir, "output_dir")));
        h.summary = None;
        if let Err(e) = h.config.validate() {
            return from_core(&e);
        }
        match experiment::run_experiment(&h.config, &dir) {
            Ok(s) => {
                h.summary = Some(s);
                CmcgStatus::Ok
            }
            Err(e) => from_core(&e),
        }
    })
}

/// Number of convergence history rows.
///
/// # Safety
/// `h` must be a valid handle and `len` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cmcg_experiment_history_len(h: *const CmcgExperiment, len: *mut usize) -> CmcgStatus {
    guard(|| {
        let s = tri!(summary(tri!(handle(h))));
        if len.is_null() {
            return fail(CmcgStatus::NullPointer, "output pointer is null");
        }
        *len = s.history.len();
        CmcgStatus::Ok
    })
}

/// Row `index` of the history: simulated periods, error, relative misfit.
///
/// # Safety
/// `h` must be a valid handle and the outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cmcg_experiment_history_row(
    h: *const CmcgExperiment,
    index: usize,
    periods: *mut usize,
    err: *mut c_double,
    misfit: *mut c_double,
) -> CmcgStatus {
    guard(|| {
        let s = tri!(summary(tri!(handle(h))));
        if periods.is_null() || err.is_null() || misfit.is_null() {
            return fail(CmcgStatus::NullPointer, "output pointer is null");
        }
        let Some(r) = s.history.rows.get(index) else {
            return fail(CmcgStatus::OutOfRange, format!("row {index} of {}", s.history.len()));
        };
        *periods = r.periods;
        *err = r.err;
        *misfit = r.misfit;
        CmcgStatus::Ok
    })
}

/// Error of the final field.
///
/// # Safety
/// `h` must be a valid handle and `err` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cmcg_experiment_final_error(h: *const CmcgExperiment, err: *mut c_double) -> CmcgStatus {
    guard(|| {
        let s = tri!(summary(tri!(handle(h))));
        if err.is_null() {
            return fail(CmcgStatus::NullPointer, "output pointer is null");
        }
        *err = s.final_error;
        CmcgStatus::Ok
    })
}

/// Number of complex dofs in the solution.
///
/// # Safety
/// `h` must be a valid handle and `len` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cmcg_experiment_ndofs(h: *const CmcgExperiment, len: *mut usize) -> CmcgStatus {
    guard(|| {
        let s = tri!(summary(tri!(handle(h))));
        if len.is_null() {
            return fail(CmcgStatus::NullPointer, "output pointer is null");
        }
        *len = s.field.len();
        CmcgStatus::Ok
    })
}

/// Copies the final complex field into `re` and `im`, each of length `len` (= ndofs).
///
/// # Safety
/// `h` must be a valid handle; `re` and `im` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cmcg_experiment_solution(
    h: *const CmcgExperiment,
    re: *mut c_double,
    im: *mut c_double,
    len: usize,
) -> CmcgStatus {
    guard(|| {
        let s = tri!(summary(tri!(handle(h))));
        if re.is_null() || im.is_null() {
            return fail(CmcgStatus::NullPointer, "output pointer is null");
        }
        if len != s.field.len() {
            return fail(CmcgStatus::OutOfRange, format!("buffer length {len}, expected {}", s.field.len()));
        }
        let re = std::slice::from_raw_parts_mut(re, len);
        let im = std::slice::from_raw_parts_mut(im, len);
        for (i, z) in s.field.iter().enumerate() {
            re[i] = z.re;
            im[i] = z.im;
        }
        CmcgStatus::Ok
    })
}

/// All presets as a JSON array; free with [`cmcg_string_free`].
#[no_mangle]
pub extern "C" fn cmcg_presets_json() -> *mut c_char {
    let items: Vec<String> = experiment::presets().iter().map(|c| c.to_json()).collect();
    CString::new(format!("[{}]", items.join(","))).unwrap_or_default().into_raw()
}

/// Frees a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cmcg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
