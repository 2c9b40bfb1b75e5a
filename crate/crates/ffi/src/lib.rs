//! C ABI for the tuning framework.
//!
//! Handles are opaque pointers; every fallible call returns an
//! [`rlopt_status`] and stores a human-readable message retrievable with
//! `rlopt_last_error_message` on failure. All strings crossing the
//! boundary are NUL-terminated UTF-8; strings returned by this library
//! must be released with `rlopt_string_free`.

#![allow(non_camel_case_types)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rlopt::harness::{self, aggregate_curves, run_batch, CurveStats, ExperimentConfig};
use rlopt::orchestrator::OptimizerRun;

/// Status codes returned by every fallible `rlopt_*` call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum rlopt_status {
    RLOPT_OK = 0,
    RLOPT_ERR_NULL_POINTER = 1,
    RLOPT_ERR_INVALID_UTF8 = 2,
    RLOPT_ERR_CONFIG = 3,
    RLOPT_ERR_RUN = 4,
    RLOPT_ERR_OUT_OF_RANGE = 5,
    RLOPT_ERR_PANIC = 6,
}

use rlopt_status::*;

/// Opaque experiment configuration handle.
pub struct rlopt_config {
    inner: ExperimentConfig,
}

/// Opaque handle over a finished batch: per-execution results plus the
/// aggregated best-so-far curve.
pub struct rlopt_run {
    runs: Vec<OptimizerRun>,
    stats: Vec<CurveStats>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(code: rlopt_status, msg: impl ToString) -> rlopt_status {
    set_error(msg.to_string());
    code
}

/// Run a closure, translating panics into `RLOPT_ERR_PANIC` instead of
/// unwinding across the ABI.
fn guarded(f: impl FnOnce() -> rlopt_status) -> rlopt_status {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => fail(RLOPT_ERR_PANIC, "internal panic"),
    }
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, rlopt_status> {
    if ptr.is_null() {
        return Err(fail(RLOPT_ERR_NULL_POINTER, "null string argument"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|e| fail(RLOPT_ERR_INVALID_UTF8, e))
}

/// Last error message for this thread, or NULL if none. The caller owns
/// the returned string and must release it with `rlopt_string_free`.
#[no_mangle]
pub extern "C" fn rlopt_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| match &*e.borrow() {
        Some(msg) => msg.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// Release a string allocated by this library. NULL is a no-op.
#[no_mangle]
pub extern "C" fn rlopt_string_free(s: *mut c_char) {
    if !s.is_null() {
        unsafe { drop(CString::from_raw(s)) };
    }
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn rlopt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// New configuration with all defaults. Release with `rlopt_config_free`.
#[no_mangle]
pub extern "C" fn rlopt_config_new() -> *mut rlopt_config {
    Box::into_raw(Box::new(rlopt_config {
        inner: ExperimentConfig::default(),
    }))
}

/// Parse a configuration from TOML text into `out`.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rlopt_config_from_toml(
    text: *const c_char,
    out: *mut *mut rlopt_config,
) -> rlopt_status {
    guarded(|| {
        if out.is_null() {
            return fail(RLOPT_ERR_NULL_POINTER, "null out pointer");
        }
        let text = match read_str(text) {
            Ok(t) => t,
            Err(code) => return code,
        };
        match harness::parse_config(text, &[]) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(rlopt_config { inner }));
                RLOPT_OK
            }
            Err(e) => fail(RLOPT_ERR_CONFIG, e),
        }
    })
}

/// Set one configuration key from its TOML value, e.g.
/// (`"bandit.policy"`, `"\"softmax\""`) or (`"episodes_bo"`, `"15"`).
///
/// # Safety
/// `cfg` must be a live handle; `key` and `value` valid strings.
#[no_mangle]
pub unsafe extern "C" fn rlopt_config_set(
    cfg: *mut rlopt_config,
    key: *const c_char,
    value: *const c_char,
) -> rlopt_status {
    guarded(|| {
        let Some(cfg) = cfg.as_mut() else {
            return fail(RLOPT_ERR_NULL_POINTER, "null config handle");
        };
        let (key, value) = match (read_str(key), read_str(value)) {
            (Ok(k), Ok(v)) => (k, v),
            (Err(code), _) | (_, Err(code)) => return code,
        };
        let base = cfg.inner.to_toml();
        match harness::parse_config(&base, &[format!("{key}={value}")]) {
            Ok(updated) => {
                cfg.inner = updated;
                RLOPT_OK
            }
            Err(e) => fail(RLOPT_ERR_CONFIG, e),
        }
    })
}

/// Serialize the resolved configuration to TOML; NULL on null handle.
/// The caller owns the returned string.
///
/// # Safety
/// `cfg` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn rlopt_config_to_toml(cfg: *const rlopt_config) -> *mut c_char {
    match cfg.as_ref() {
        Some(cfg) => CString::new(cfg.inner.to_toml())
            .map(CString::into_raw)
            .unwrap_or(ptr::null_mut()),
        None => ptr::null_mut(),
    }
}

/// Release a configuration handle. NULL is a no-op.
///
/// # Safety
/// `cfg` must be a handle from this library, released at most once.
#[no_mangle]
pub unsafe extern "C" fn rlopt_config_free(cfg: *mut rlopt_config) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Execute the configured batch, producing a result handle in `out`.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rlopt_run_batch(
    cfg: *const rlopt_config,
    out: *mut *mut rlopt_run,
) -> rlopt_status {
    guarded(|| {
        if out.is_null() {
            return fail(RLOPT_ERR_NULL_POINTER, "null out pointer");
        }
        let Some(cfg) = cfg.as_ref() else {
            return fail(RLOPT_ERR_NULL_POINTER, "null config handle");
        };
        let runs = match run_batch(&cfg.inner) {
            Ok(r) => r,
            Err(e) => return fail(RLOPT_ERR_RUN, e),
        };
        let stats = match aggregate_curves(&runs) {
            Ok(s) => s,
            Err(e) => return fail(RLOPT_ERR_RUN, e),
        };
        *out = Box::into_raw(Box::new(rlopt_run { runs, stats }));
        RLOPT_OK
    })
}

/// Number of executions in the batch; 0 on null handle.
///
/// # Safety
/// `run` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn rlopt_run_n_executions(run: *const rlopt_run) -> usize {
    run.as_ref().map_or(0, |r| r.runs.len())
}

/// Meta-episodes per execution (length of the best-so-far curve).
///
/// # Safety
/// `run` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn rlopt_run_curve_len(run: *const rlopt_run) -> usize {
    run.as_ref().map_or(0, |r| r.stats.len())
}

/// Final objective value of one execution.
///
/// # Safety
/// `run` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rlopt_run_best_value(
    run: *const rlopt_run,
    execution: usize,
    out: *mut f64,
) -> rlopt_status {
    guarded(|| {
        let Some(run) = run.as_ref() else {
            return fail(RLOPT_ERR_NULL_POINTER, "null run handle");
        };
        if out.is_null() {
            return fail(RLOPT_ERR_NULL_POINTER, "null out pointer");
        }
        match run.runs.get(execution) {
            Some(r) => {
                *out = r.best_value;
                RLOPT_OK
            }
            None => fail(
                RLOPT_ERR_OUT_OF_RANGE,
                format!("execution {execution} of {}", run.runs.len()),
            ),
        }
    })
}

/// Incumbent θ = (α, ε, γ, λ) of one execution, written to `out[0..4]`.
///
/// # Safety
/// `run` must be a live handle; `out` must point at 4 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rlopt_run_best_theta(
    run: *const rlopt_run,
    execution: usize,
    out: *mut f64,
) -> rlopt_status {
    guarded(|| {
        let Some(run) = run.as_ref() else {
            return fail(RLOPT_ERR_NULL_POINTER, "null run handle");
        };
        if out.is_null() {
            return fail(RLOPT_ERR_NULL_POINTER, "null out pointer");
        }
        match run.runs.get(execution) {
            Some(r) => {
                let theta = r.best_theta.as_array();
                std::ptr::copy_nonoverlapping(theta.as_ptr(), out, 4);
                RLOPT_OK
            }
            None => fail(
                RLOPT_ERR_OUT_OF_RANGE,
                format!("execution {execution} of {}", run.runs.len()),
            ),
        }
    })
}

/// Queries consumed by one execution.
///
/// # Safety
/// `run` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rlopt_run_total_queries(
    run: *const rlopt_run,
    execution: usize,
    out: *mut u64,
) -> rlopt_status {
    guarded(|| {
        let Some(run) = run.as_ref() else {
            return fail(RLOPT_ERR_NULL_POINTER, "null run handle");
        };
        if out.is_null() {
            return fail(RLOPT_ERR_NULL_POINTER, "null out pointer");
        }
        match run.runs.get(execution) {
            Some(r) => {
                *out = r.total_queries;
                RLOPT_OK
            }
            None => fail(
                RLOPT_ERR_OUT_OF_RANGE,
                format!("execution {execution} of {}", run.runs.len()),
            ),
        }
    })
}

/// Cross-execution mean of the best-so-far curve at one meta-episode.
///
/// # Safety
/// `run` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rlopt_run_curve_mean(
    run: *const rlopt_run,
    meta_episode: usize,
    out: *mut f64,
) -> rlopt_status {
    guarded(|| {
        let Some(run) = run.as_ref() else {
            return fail(RLOPT_ERR_NULL_POINTER, "null run handle");
        };
        if out.is_null() {
            return fail(RLOPT_ERR_NULL_POINTER, "null out pointer");
        }
        match run.stats.get(meta_episode) {
            Some(s) => {
                *out = s.mean;
                RLOPT_OK
            }
            None => fail(
                RLOPT_ERR_OUT_OF_RANGE,
                format!("meta-episode {meta_episode} of {}", run.stats.len()),
            ),
        }
    })
}

/// Release a run handle. NULL is a no-op.
///
/// # Safety
/// `run` must be a handle from this library, released at most once.
#[no_mangle]
pub unsafe extern "C" fn rlopt_run_free(run: *mut rlopt_run) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
