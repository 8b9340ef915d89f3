//! C interface to the iapial solver.
//!
//! Objects are opaque handles created and freed through this API. Every
//! fallible call returns an [`IapialStatus`]; the message of the last
//! failure on the calling thread is available from [`iapial_last_error`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::time::{Duration, Instant};

use libc::{c_char, c_double, c_int, size_t};

use iapial::driver::{solve, DriverConfig, RestartMode, SolveReport};
use iapial::io::{to_json_string, ProblemFile, Summary};
use iapial::problem::{ProblemInstance, TolerancePair};
use iapial::verify::{generate, GeneratorSpec};
use iapial::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IapialStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    /// The solver stopped at the cycle cap; a result handle is still returned.
    CycleCap = 5,
    /// The time limit was hit; a result handle is still returned.
    Timeout = 6,
    Solver = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IapialRestart {
    Warm = 0,
    Cold = 1,
}

/// Solver settings. Start from [`iapial_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct IapialOptions {
    pub rho: c_double,
    pub eta: c_double,
    pub nu: c_double,
    pub sigma: c_double,
    pub c1: c_double,
    pub restart: IapialRestart,
    pub max_cycles: size_t,
    /// Outer iterations per cycle; 0 uses the default.
    pub max_outer: size_t,
    /// Seconds; 0 or negative means no limit.
    pub time_limit: c_double,
}

/// Opaque problem handle.
pub struct IapialProblem {
    inner: ProblemInstance,
}

/// Opaque result handle.
pub struct IapialResult {
    report: SolveReport,
    summary: Summary,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> IapialStatus {
    match e {
        Error::Parse(_) | Error::Json(_) => IapialStatus::Parse,
        Error::Argument(_) | Error::Dimension(_) | Error::Assumption(_) | Error::OutsideDomain => {
            IapialStatus::InvalidArgument
        }
        Error::CycleCap { .. } => IapialStatus::CycleCap,
        Error::Timeout { .. } => IapialStatus::Timeout,
        _ => IapialStatus::Solver,
    }
}

fn guard<F: FnOnce() -> IapialStatus>(f: F) -> IapialStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            IapialStatus::Panic
        }
    }
}

fn fail(e: Error) -> IapialStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, IapialStatus> {
    if s.is_null() {
        set_error("null string argument".into());
        return Err(IapialStatus::NullPointer);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8".into());
        IapialStatus::InvalidUtf8
    })
}

fn null_arg(what: &str) -> IapialStatus {
    set_error(format!("null pointer: {what}"));
    IapialStatus::NullPointer
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn iapial_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn iapial_options_default() -> IapialOptions {
    IapialOptions {
        rho: 1e-3,
        eta: 1e-3,
        nu: 1.0,
        sigma: std::f64::consts::FRAC_1_SQRT_2,
        c1: 1.0,
        restart: IapialRestart::Warm,
        max_cycles: iapial::driver::DEFAULT_MAX_CYCLES,
        max_outer: 0,
        time_limit: 0.0,
    }
}

/// Parses a problem file (JSON text).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iapial_problem_from_json(json: *const c_char, out: *mut *mut IapialProblem) -> IapialStatus {
    guard(|| {
        if out.is_null() {
            return null_arg("out");
        }
        *out = ptr::null_mut();
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let file: ProblemFile = match serde_json::from_str(text) {
            Ok(f) => f,
            Err(e) => return fail(Error::Json(e)),
        };
        match file.to_instance() {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(IapialProblem { inner }));
                IapialStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Generates an instance from a generator spec (JSON text).
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iapial_problem_generate(spec: *const c_char, out: *mut *mut IapialProblem) -> IapialStatus {
    guard(|| {
        if out.is_null() {
            return null_arg("out");
        }
        *out = ptr::null_mut();
        let text = match read_str(spec) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let spec: GeneratorSpec = match serde_json::from_str(text) {
            Ok(s) => s,
            Err(e) => return fail(Error::Json(e)),
        };
        match generate(&spec) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(IapialProblem { inner }));
                IapialStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `problem` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn iapial_problem_free(problem: *mut IapialProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// # Safety
/// `problem` must be a live handle; `n` and `l` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn iapial_problem_dims(
    problem: *const IapialProblem,
    n: *mut size_t,
    l: *mut size_t,
) -> IapialStatus {
    guard(|| {
        if problem.is_null() || n.is_null() || l.is_null() {
            return null_arg("problem, n or l");
        }
        *n = (*problem).inner.n();
        *l = (*problem).inner.l();
        IapialStatus::Ok
    })
}

/// Serializes the problem back to JSON. Free with [`iapial_string_free`].
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iapial_problem_to_json(problem: *const IapialProblem, out: *mut *mut c_char) -> IapialStatus {
    guard(|| {
        if problem.is_null() || out.is_null() {
            return null_arg("problem or out");
        }
        *out = ptr::null_mut();
        match to_json_string(&ProblemFile::from_instance(&(*problem).inner)) {
            Ok(s) => {
                *out = CString::new(s).unwrap_or_default().into_raw();
                IapialStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

fn driver_config(o: &IapialOptions) -> Result<DriverConfig, Error> {
    let mut cfg = DriverConfig::new(TolerancePair::new(o.rho, o.eta)?);
    cfg.nu = o.nu;
    cfg.sigma = o.sigma;
    cfg.c1 = o.c1;
    cfg.restart = match o.restart {
        IapialRestart::Warm => RestartMode::HybridWarm,
        IapialRestart::Cold => RestartMode::Cold,
    };
    cfg.max_cycles = o.max_cycles;
    cfg.max_outer = (o.max_outer > 0).then_some(o.max_outer);
    if o.time_limit > 0.0 {
        if !o.time_limit.is_finite() {
            return Err(Error::Argument("time limit must be finite".into()));
        }
        cfg.deadline = Some(Instant::now() + Duration::from_secs_f64(o.time_limit));
    }
    Ok(cfg)
}

/// Runs the solver. On `Ok`, `CycleCap` and `Timeout` a result handle is
/// stored in `out`; otherwise `out` is set to NULL.
///
/// # Safety
/// `problem` must be a live handle, `options` NULL or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn iapial_solve(
    problem: *const IapialProblem,
    options: *const IapialOptions,
    out: *mut *mut IapialResult,
) -> IapialStatus {
    guard(|| {
        if problem.is_null() || out.is_null() {
            return null_arg("problem or out");
        }
        *out = ptr::null_mut();
        let inst = &(*problem).inner;
        let opts = if options.is_null() {
            iapial_options_default()
        } else {
            *options
        };
        let cfg = match driver_config(&opts) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        let z0 = match inst.default_start() {
            Ok(z) => z,
            Err(e) => return fail(e),
        };
        let (report, status) = match solve(inst, &cfg, &z0) {
            Ok(r) => (r, IapialStatus::Ok),
            Err(Error::CycleCap { cap, report }) => {
                set_error(format!("cycle cap of {cap} reached"));
                (*report, IapialStatus::CycleCap)
            }
            Err(Error::Timeout { report }) => {
                set_error(format!("time limit reached after {} cycles", report.cycles.len()));
                (*report, IapialStatus::Timeout)
            }
            Err(e) => return fail(e),
        };
        let summary = Summary::from_report(inst, &report);
        *out = Box::into_raw(Box::new(IapialResult { report, summary }));
        status
    })
}

/// # Safety
/// `result` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn iapial_result_free(result: *mut IapialResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// 1 if an approximate stationary triple was found, 0 if not, -1 on NULL.
///
/// # Safety
/// `result` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn iapial_result_success(result: *const IapialResult) -> c_int {
    if result.is_null() {
        return -1;
    }
    c_int::from((*result).report.success)
}

/// Number of penalty cycles run, 0 on NULL.
///
/// # Safety
/// `result` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn iapial_result_cycles(result: *const IapialResult) -> size_t {
    if result.is_null() {
        return 0;
    }
    (*result).report.cycles.len()
}

/// Penalty of the last cycle run, NaN if none.
///
/// # Safety
/// `result` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn iapial_result_final_penalty(result: *const IapialResult) -> c_double {
    if result.is_null() {
        return f64::NAN;
    }
    (*result).report.cycles.last().map_or(f64::NAN, |c| c.c)
}

/// Writes `||w||`, `||A z - b||` and the inclusion residual of the triple.
///
/// # Safety
/// `result` must be a live handle; the out pointers valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn iapial_result_residuals(
    result: *const IapialResult,
    w_norm: *mut c_double,
    feasibility: *mut c_double,
    inclusion: *mut c_double,
) -> IapialStatus {
    guard(|| {
        if result.is_null() {
            return null_arg("result");
        }
        let Some(t) = (*result).summary.triple.as_ref() else {
            set_error("no triple: the solve did not succeed".into());
            return IapialStatus::Solver;
        };
        for (dst, v) in [(w_norm, t.w_norm), (feasibility, t.feasibility), (inclusion, t.inclusion_residual)] {
            if !dst.is_null() {
                *dst = v;
            }
        }
        IapialStatus::Ok
    })
}

/// Copies the triple `(z, w, p)` into caller buffers of lengths `n`, `n`, `l`.
///
/// # Safety
/// `result` must be a live handle; each buffer must hold its stated length.
#[no_mangle]
pub unsafe extern "C" fn iapial_result_triple(
    result: *const IapialResult,
    z: *mut c_double,
    z_len: size_t,
    w: *mut c_double,
    w_len: size_t,
    p: *mut c_double,
    p_len: size_t,
) -> IapialStatus {
    guard(|| {
        if result.is_null() || z.is_null() || w.is_null() || p.is_null() {
            return null_arg("result or buffer");
        }
        let Some(t) = (*result).report.triple.as_ref() else {
            set_error("no triple: the solve did not succeed".into());
            return IapialStatus::Solver;
        };
        if z_len < t.z.len() || w_len < t.w.len() || p_len < t.p.len() {
            set_error(format!(
                "buffers need lengths ({}, {}, {})",
                t.z.len(),
                t.w.len(),
                t.p.len()
            ));
            return IapialStatus::BufferTooSmall;
        }
        ptr::copy_nonoverlapping(t.z.as_ptr(), z, t.z.len());
        ptr::copy_nonoverlapping(t.w.as_ptr(), w, t.w.len());
        ptr::copy_nonoverlapping(t.p.as_ptr(), p, t.p.len());
        IapialStatus::Ok
    })
}

/// Summary JSON of the run. Free with [`iapial_string_free`].
///
/// # Safety
/// `result` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iapial_result_summary_json(result: *const IapialResult, out: *mut *mut c_char) -> IapialStatus {
    guard(|| {
        if result.is_null() || out.is_null() {
            return null_arg("result or out");
        }
        *out = ptr::null_mut();
        match to_json_string(&(*result).summary) {
            Ok(s) => {
                *out = CString::new(s).unwrap_or_default().into_raw();
                IapialStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `s` must be a string returned by this library or NULL.
#[no_mangle]
pub unsafe extern "C" fn iapial_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
