//! C interface to the curveflow solver.
//!
//! Every fallible function returns a status code (`CF_OK` on success) and
//! writes its result through an out-pointer. The message for the last failure
//! on the calling thread is available from `cf_last_error_message`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use curveflow::barrier::admissible_constant;
use curveflow::cli::RunConfig;
use curveflow::curvfun::CurvatureFunction;
use curveflow::error::Error;
use curveflow::flow::{run, FlowResult, ProblemSpec, Shape};
use curveflow::spaceform::{SpaceformConfig, SpaceformKind};

pub const CF_OK: i32 = 0;
pub const CF_NULL_POINTER: i32 = 1;
pub const CF_INVALID_UTF8: i32 = 2;
/// Malformed configuration, expression or JSON.
pub const CF_CONFIG: i32 = 3;
/// Argument outside the domain (annulus, positivity, ...).
pub const CF_DOMAIN: i32 = 4;
pub const CF_PARAMETER: i32 = 5;
pub const CF_UNSUPPORTED: i32 = 6;
pub const CF_NO_BARRIER: i32 = 7;
/// Convexity loss, stall or oracle failure.
pub const CF_NUMERICAL: i32 = 8;
pub const CF_BUFFER_TOO_SMALL: i32 = 9;
pub const CF_PANIC: i32 = 10;

pub const CF_EUCLID: i32 = 0;
pub const CF_SPHERE: i32 = 1;
pub const CF_HYPERBOLIC: i32 = 2;
pub const CF_DE_SITTER: i32 = 3;

/// A validated problem with its barriers and run options.
pub struct CfProblem {
    config: RunConfig,
    problem: ProblemSpec,
    initial: Option<Shape>,
}

/// Outcome of `cf_solve`.
pub struct CfResult {
    result: FlowResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn code_of(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Parse { .. } | Error::UnknownIdentifier { .. } | Error::Io(_) => CF_CONFIG,
        Error::Domain(_) | Error::NotSpacelike(_) | Error::NonPositiveData { .. } | Error::DivisionByZero => CF_DOMAIN,
        Error::Parameter(_) => CF_PARAMETER,
        Error::Unsupported(_) => CF_UNSUPPORTED,
        Error::NoBarrier(_) => CF_NO_BARRIER,
        Error::ConvexityLoss { .. } | Error::Stall { .. } | Error::Oracle(_) | Error::NotClassified(_) => CF_NUMERICAL,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (i32, String)>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CF_OK
        }
        Ok(Err((code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            CF_PANIC
        }
    }
}

fn fail(e: Error) -> (i32, String) {
    (code_of(&e), e.to_string())
}

fn null(name: &str) -> (i32, String) {
    (CF_NULL_POINTER, format!("`{name}` is null"))
}

unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, (i32, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (CF_INVALID_UTF8, format!("`{name}` is not UTF-8: {e}")))
}

/// Message describing the last failure on this thread; empty after success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn cf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a run configuration (the CLI's JSON schema) and searches barriers.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_problem_new(config_json: *const c_char, out: *mut *mut CfProblem) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = read_str(config_json, "config_json")?;
        let config = RunConfig::from_json(text).map_err(fail)?;
        let (problem, _) = config.build().map_err(fail)?;
        let initial = config.initial_shape(&problem).map_err(fail)?;
        *out = Box::into_raw(Box::new(CfProblem {
            config,
            problem,
            initial,
        }));
        Ok(())
    })
}

/// # Safety
/// `problem` must come from `cf_problem_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cf_problem_free(problem: *mut CfProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Barrier radii of a problem.
///
/// # Safety
/// `problem` must be a live handle; `lower` and `upper` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_problem_barriers(problem: *const CfProblem, lower: *mut f64, upper: *mut f64) -> i32 {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        if lower.is_null() || upper.is_null() {
            return Err(null("lower/upper"));
        }
        *lower = p.problem.barriers.r_lower;
        *upper = p.problem.barriers.r_upper;
        Ok(())
    })
}

/// Runs the flow. A non-converged run still succeeds and yields a result;
/// query `cf_result_converged`.
///
/// # Safety
/// `problem` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_solve(problem: *const CfProblem, out: *mut *mut CfResult) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let result = run(&p.problem, p.initial.clone(), &p.config.numerics.run_options()).map_err(fail)?;
        *out = Box::into_raw(Box::new(CfResult { result }));
        Ok(())
    })
}

/// # Safety
/// `result` must come from `cf_solve` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cf_result_free(result: *mut CfResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Writes 1 if the run converged, 0 otherwise.
///
/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_result_converged(result: *const CfResult, out: *mut i32) -> i32 {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = i32::from(r.result.converged);
        Ok(())
    })
}

/// Final `sup |F − f|` and number of accepted steps.
///
/// # Safety
/// `result` must be a live handle; `residual` and `steps` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_result_stats(result: *const CfResult, residual: *mut f64, steps: *mut u64) -> i32 {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let residual = residual.as_mut().ok_or_else(|| null("residual"))?;
        let steps = steps.as_mut().ok_or_else(|| null("steps"))?;
        *residual = r.result.residual;
        *steps = r.result.steps as u64;
        Ok(())
    })
}

/// Number of profile nodes.
///
/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_result_profile_len(result: *const CfResult, out: *mut usize) -> i32 {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = r.result.profile.values().len();
        Ok(())
    })
}

/// Copies the profile values into `buf`, which must hold at least the
/// length reported by `cf_result_profile_len`.
///
/// # Safety
/// `result` must be a live handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cf_result_profile_copy(result: *const CfResult, buf: *mut f64, len: usize) -> i32 {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let values = r.result.profile.values();
        if len < values.len() {
            return Err((
                CF_BUFFER_TOO_SMALL,
                format!("buffer holds {len} values, profile has {}", values.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, values.len()).copy_from_slice(values);
        Ok(())
    })
}

/// Serializes the full result as JSON; release with `cf_string_free`.
///
/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_result_to_json(result: *const CfResult, out: *mut *mut c_char) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let text = serde_json::to_string(&r.result).map_err(|e| fail(e.into()))?;
        let c = CString::new(text).map_err(|e| (CF_CONFIG, e.to_string()))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Evaluates a curvature function, given as JSON such as
/// `{"family": "power_mean", "k": 2, "n": 3}`, at `kappa[0..len]`.
///
/// # Safety
/// `function_json` must be NUL-terminated; `kappa` must point to `len`
/// doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_curvature_eval(
    function_json: *const c_char,
    kappa: *const f64,
    len: usize,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let text = read_str(function_json, "function_json")?;
        if kappa.is_null() {
            return Err(null("kappa"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let f: CurvatureFunction = serde_json::from_str(text).map_err(|e| (CF_CONFIG, e.to_string()))?;
        let k = std::slice::from_raw_parts(kappa, len);
        *out = f.eval(k).map_err(fail)?;
        Ok(())
    })
}

/// Largest admissible constant `c` of the power-law data `c·s^{1−q}φ` on the
/// annulus `(a, b)`, anchored at `anchor` (hemisphere and de Sitter space).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_admissible_constant(
    kind: i32,
    n: usize,
    a: f64,
    b: f64,
    phi_sup: f64,
    q: f64,
    anchor: f64,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let kind = match kind {
            CF_EUCLID => SpaceformKind::Euclid,
            CF_SPHERE => SpaceformKind::Sphere,
            CF_HYPERBOLIC => SpaceformKind::Hyperbolic,
            CF_DE_SITTER => SpaceformKind::DeSitter,
            other => return Err((CF_PARAMETER, format!("unknown space kind {other}"))),
        };
        let space = SpaceformConfig::new(kind, a, b).map_err(fail)?;
        *out = admissible_constant(&space, n, phi_sup, q, anchor).map_err(fail)?;
        Ok(())
    })
}
