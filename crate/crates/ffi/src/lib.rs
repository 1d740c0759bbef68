//! C interface to the solver.
//!
//! Configurations and results live behind opaque handles created and
//! destroyed by this library. Every fallible call returns a [`TevStatus`];
//! the message of the most recent failure on the calling thread is
//! available from [`tev_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use tev::multigrid::run_multigrid;
use tev::report::{emit_outputs, ReportBundle, RunConfig};
use tev::Error;

/// Result codes of the C interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TevStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Invalid configuration (unknown key, bad value, contrast condition).
    Config = 3,
    /// The eigensolver or a factorization failed.
    Solver = 4,
    /// Reading or writing files failed.
    Io = 5,
    /// A level or eigenvalue index was out of range.
    OutOfRange = 6,
    /// An internal panic was caught at the boundary.
    Panic = 7,
}

/// Opaque experiment configuration.
pub struct TevConfig {
    inner: RunConfig,
}

/// Opaque outcome of a run: the per-level tables of all finished levels.
pub struct TevResult {
    bundle: ReportBundle,
    levels: Vec<(usize, f64)>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn fail(status: TevStatus, msg: impl Into<String>) -> TevStatus {
    set_error(msg);
    status
}

fn from_error(err: &Error) -> TevStatus {
    let status = match err {
        e if e.is_config() => TevStatus::Config,
        Error::Io(_) => TevStatus::Io,
        _ => TevStatus::Solver,
    };
    fail(status, err.to_string())
}

fn guard(f: impl FnOnce() -> TevStatus) -> TevStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(TevStatus::Panic, "internal panic"))
}

unsafe fn utf8<'a>(s: *const c_char) -> Result<&'a str, TevStatus> {
    if s.is_null() {
        return Err(fail(TevStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(TevStatus::InvalidUtf8, "string argument is not UTF-8"))
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tev_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tev_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New configuration with default settings. Release it with
/// [`tev_config_free`].
#[no_mangle]
pub extern "C" fn tev_config_new() -> *mut TevConfig {
    Box::into_raw(Box::new(TevConfig {
        inner: RunConfig::default(),
    }))
}

/// Parses `key=value` text into a new configuration stored in `*out`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tev_config_parse(text: *const c_char, out: *mut *mut TevConfig) -> TevStatus {
    guard(|| {
        if out.is_null() {
            return fail(TevStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let s = match utf8(text) {
            Ok(s) => s,
            Err(st) => return st,
        };
        match RunConfig::parse(s) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(TevConfig { inner }));
                TevStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// Sets one configuration entry, using the keys of the text format.
/// The configuration is left unchanged on failure.
///
/// # Safety
/// `config` must come from this library; `key` and `value` must be
/// NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn tev_config_set(config: *mut TevConfig, key: *const c_char, value: *const c_char) -> TevStatus {
    guard(|| {
        let Some(cfg) = config.as_mut() else {
            return fail(TevStatus::NullPointer, "null configuration");
        };
        let (k, v) = match (utf8(key), utf8(value)) {
            (Ok(k), Ok(v)) => (k, v),
            (Err(st), _) | (_, Err(st)) => return st,
        };
        let mut next = cfg.inner.clone();
        if let Err(e) = next.set(k, v).and_then(|_| next.validate()) {
            return from_error(&e);
        }
        cfg.inner = next;
        TevStatus::Ok
    })
}

/// Releases a configuration.
///
/// # Safety
/// `config` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn tev_config_free(config: *mut TevConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs the multigrid scheme without writing files. On a solver failure
/// the status is `TEV_STATUS_SOLVER` and `*out` still receives the levels
/// finished before the failure; release it with [`tev_result_free`].
///
/// # Safety
/// `config` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tev_run(config: *const TevConfig, out: *mut *mut TevResult) -> TevStatus {
    guard(|| {
        if out.is_null() {
            return fail(TevStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let Some(cfg) = config.as_ref() else {
            return fail(TevStatus::NullPointer, "null configuration");
        };
        let cfg = &cfg.inner;
        if let Err(e) = cfg.validate() {
            return from_error(&e);
        }
        let run = run_multigrid(&cfg.multigrid());
        let bundle = ReportBundle::from_levels(&run.levels, cfg.reference.as_deref(), cfg.record_time);
        let levels = run.levels.iter().map(|s| (s.pairs.len(), s.h)).collect();
        *out = Box::into_raw(Box::new(TevResult { bundle, levels }));
        match run.error {
            Some(e) => from_error(&e),
            None => TevStatus::Ok,
        }
    })
}

/// Number of finished levels.
///
/// # Safety
/// `result` must come from this library or be null (gives 0).
#[no_mangle]
pub unsafe extern "C" fn tev_result_levels(result: *const TevResult) -> usize {
    result.as_ref().map_or(0, |r| r.levels.len())
}

/// Mesh size and eigenvalue count of level `level` (0-based).
///
/// # Safety
/// `result` must come from this library; `h` and `count` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tev_result_level(result: *const TevResult, level: usize, h: *mut f64, count: *mut usize) -> TevStatus {
    guard(|| {
        let (Some(r), false, false) = (result.as_ref(), h.is_null(), count.is_null()) else {
            return fail(TevStatus::NullPointer, "null argument");
        };
        let Some(&(n, hv)) = r.levels.get(level) else {
            return fail(TevStatus::OutOfRange, format!("level {level} out of range"));
        };
        *h = hv;
        *count = n;
        TevStatus::Ok
    })
}

/// Eigenvalue `j` (0-based, tracking order) of level `level` as
/// `k = sqrt(lambda)` with nonnegative real part, and its relative
/// residual. `residual` may be null.
///
/// # Safety
/// `result` must come from this library; `k_re` and `k_im` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tev_result_eigenvalue(
    result: *const TevResult,
    level: usize,
    j: usize,
    k_re: *mut f64,
    k_im: *mut f64,
    residual: *mut f64,
) -> TevStatus {
    guard(|| {
        let (Some(r), false, false) = (result.as_ref(), k_re.is_null(), k_im.is_null()) else {
            return fail(TevStatus::NullPointer, "null argument");
        };
        let row = r.bundle.eigenvalues.iter().find(|e| e.level == level + 1 && e.j == j + 1);
        let Some(row) = row else {
            return fail(TevStatus::OutOfRange, format!("eigenvalue {j} of level {level} out of range"));
        };
        *k_re = row.k.re;
        *k_im = row.k.im;
        if !residual.is_null() {
            *residual = row.residual;
        }
        TevStatus::Ok
    })
}

/// Fitted convergence order of eigenvalue `j` (0-based). Fails with
/// `TEV_STATUS_OUT_OF_RANGE` when fewer than three error points exist.
///
/// # Safety
/// `result` must come from this library; `slope` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tev_result_order(result: *const TevResult, j: usize, slope: *mut f64) -> TevStatus {
    guard(|| {
        let (Some(r), false) = (result.as_ref(), slope.is_null()) else {
            return fail(TevStatus::NullPointer, "null argument");
        };
        match r.bundle.orders.iter().find(|o| o.0 == j + 1) {
            Some(o) => {
                *slope = o.1;
                TevStatus::Ok
            }
            None => fail(TevStatus::OutOfRange, format!("no convergence order for eigenvalue {j}")),
        }
    })
}

/// Writes the CSV tables and the error plot into directory `dir`.
///
/// # Safety
/// `result` must come from this library; `dir` must be a NUL-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn tev_result_write(result: *const TevResult, dir: *const c_char) -> TevStatus {
    guard(|| {
        let Some(r) = result.as_ref() else {
            return fail(TevStatus::NullPointer, "null result");
        };
        let d = match utf8(dir) {
            Ok(d) => d,
            Err(st) => return st,
        };
        match emit_outputs(&r.bundle, Path::new(d)) {
            Ok(()) => TevStatus::Ok,
            Err(e) => from_error(&e),
        }
    })
}

/// Releases a result.
///
/// # Safety
/// `result` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn tev_result_free(result: *mut TevResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
