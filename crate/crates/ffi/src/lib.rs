//! C ABI over `hrlab`.
//!
//! Laws and scenarios live behind opaque handles made by the `hrlab_dist_*`
//! and `hrlab_scenario_*` constructors and released with the matching
//! `_free`. Every fallible
//! call returns an [`HrlabStatus`]; on failure the message is kept per thread
//! and read with [`hrlab_last_error_message`]. Strings handed out by the
//! library are released with [`hrlab_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use hrlab::counterexample::build_counterexample;
use hrlab::distributions::DistModel;
use hrlab::montecarlo::{estimate_tail, SimConfig};
use hrlab::scenario::{bundled_scenario, run_scenario, Scenario};
use hrlab::sequences::{NormingSequence, SlowlyVaryingSpec, WeightSequence};
use hrlab::series_lab::eval_condition_ii;
use hrlab::verdict::Verdict;
use hrlab::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HrlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Domain = 3,
    Numeric = 4,
    Unsupported = 5,
    Config = 6,
    Io = 7,
    InvalidUtf8 = 8,
    Panic = 9,
}

/// Three-valued series verdict.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HrlabVerdict {
    Converges = 0,
    Diverges = 1,
    Inconclusive = 2,
}

/// Opaque law of X.
pub struct HrlabDist(DistModel);

/// Opaque parsed scenario.
pub struct HrlabScenario(Scenario);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HrlabStatus {
    match e {
        Error::Domain(_) => HrlabStatus::Domain,
        Error::Input(_) => HrlabStatus::InvalidInput,
        Error::Numeric { .. } => HrlabStatus::Numeric,
        Error::Unsupported(_) => HrlabStatus::Unsupported,
        Error::Config(_) => HrlabStatus::Config,
        Error::Io(_) => HrlabStatus::Io,
    }
}

struct Fail(HrlabStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(HrlabStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, turning errors and panics into a status plus a stored message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HrlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            HrlabStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            HrlabStatus::Panic
        }
    }
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Fail(HrlabStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn dist_ref<'a>(d: *const HrlabDist) -> Result<&'a DistModel, Fail> {
    d.as_ref()
        .map(|h| &h.0)
        .ok_or_else(|| null("distribution handle"))
}

unsafe fn new_dist(out: *mut *mut HrlabDist, d: DistModel) -> Result<(), Fail> {
    put(out, Box::into_raw(Box::new(HrlabDist(d))))
}

/// Message from the latest call on this thread if it failed, else NULL.
/// Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn hrlab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hrlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn hrlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hrlab_dist_rademacher(out: *mut *mut HrlabDist) -> HrlabStatus {
    guard(|| new_dist(out, DistModel::rademacher()))
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hrlab_dist_gaussian(sigma: f64, out: *mut *mut HrlabDist) -> HrlabStatus {
    guard(|| new_dist(out, DistModel::gaussian(sigma)?))
}

/// Symmetric Pareto: `P(|X| ≥ λ) = min(1, (scale/λ)^q)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hrlab_dist_pareto(q: f64, scale: f64, out: *mut *mut HrlabDist) -> HrlabStatus {
    guard(|| new_dist(out, DistModel::pareto(q, scale)?))
}

/// Atoms `±values[i]` with mass `probs[i]` each, plus `p0` at zero.
///
/// # Safety
/// `values` and `probs` must point to `len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hrlab_dist_atomic(
    values: *const f64,
    probs: *const f64,
    len: usize,
    p0: f64,
    out: *mut *mut HrlabDist,
) -> HrlabStatus {
    guard(|| {
        if len > 0 && (values.is_null() || probs.is_null()) {
            return Err(null("atom array"));
        }
        let atoms = (0..len).map(|i| (*values.add(i), *probs.add(i))).collect();
        new_dist(out, DistModel::atomic(atoms, p0)?)
    })
}

/// The divergent construction truncated to `levels` levels.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hrlab_dist_counterexample(levels: u32, out: *mut *mut HrlabDist) -> HrlabStatus {
    guard(|| {
        new_dist(
            out,
            DistModel::counterexample(Arc::new(build_counterexample(levels)?)),
        )
    })
}

/// # Safety
/// `d` must be NULL or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn hrlab_dist_free(d: *mut HrlabDist) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// `P(|X| ≥ lambda)`.
///
/// # Safety
/// `d` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hrlab_dist_tail(d: *const HrlabDist, lambda: f64, out: *mut f64) -> HrlabStatus {
    guard(|| put(out, dist_ref(d)?.tail(lambda)?))
}

/// `E[|X|^nu 1{|X| < b}]`.
///
/// # Safety
/// `d` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hrlab_dist_truncated_moment(
    d: *const HrlabDist,
    nu: f64,
    b: f64,
    out: *mut f64,
) -> HrlabStatus {
    guard(|| put(out, dist_ref(d)?.truncated_moment(nu, b)?))
}

/// `Σ n τ_n P(|X| ≥ ε a_n)` for `τ_n = n^beta` and `a_n = n^alpha`, both
/// from n = 1, summed to `horizon`.
///
/// # Safety
/// `d` must be a live handle; `verdict` and `partial_sum` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hrlab_condition_ii_power(
    d: *const HrlabDist,
    beta: f64,
    alpha: f64,
    eps: f64,
    horizon: u64,
    verdict: *mut HrlabVerdict,
    partial_sum: *mut f64,
) -> HrlabStatus {
    guard(|| {
        let dist = dist_ref(d)?;
        let tau = WeightSequence::power_law(beta, SlowlyVaryingSpec::one(), 1)?;
        let a = NormingSequence::power(alpha)?;
        let v = eval_condition_ii(dist, &tau, &a, eps, horizon)?;
        put(
            verdict,
            match v.verdict {
                Verdict::Converges => HrlabVerdict::Converges,
                Verdict::Diverges => HrlabVerdict::Diverges,
                Verdict::Inconclusive => HrlabVerdict::Inconclusive,
            },
        )?;
        put(partial_sum, v.partial_sum)
    })
}

/// Monte Carlo `P(|S_n| ≥ threshold)` and its standard error.
///
/// # Safety
/// `d` must be a live handle; `p_hat` and `std_err` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hrlab_estimate_tail(
    d: *const HrlabDist,
    n: u64,
    threshold: f64,
    seed: u64,
    replicates: u64,
    p_hat: *mut f64,
    std_err: *mut f64,
) -> HrlabStatus {
    guard(|| {
        let t = estimate_tail(dist_ref(d)?, n, threshold, &SimConfig::new(seed, replicates))?;
        put(p_hat, t.p_hat)?;
        put(std_err, t.std_err)
    })
}

/// Certificate totals for the divergent construction.
///
/// # Safety
/// `cumulative` and `phi_moment` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hrlab_counterexample_certificate(
    levels: u32,
    cumulative: *mut f64,
    phi_moment: *mut f64,
) -> HrlabStatus {
    guard(|| {
        let cert = build_counterexample(levels)?.divergence_certificate()?;
        put(cumulative, cert.cumulative)?;
        put(phi_moment, cert.phi_moment_truncated)
    })
}

/// Parses and validates scenario TOML.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hrlab_scenario_parse(
    toml: *const c_char,
    out: *mut *mut HrlabScenario,
) -> HrlabStatus {
    guard(|| {
        let s = Scenario::from_toml(read_str(toml, "scenario text")?)?;
        put(out, Box::into_raw(Box::new(HrlabScenario(s))))
    })
}

/// Loads a bundled scenario by name.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hrlab_scenario_bundled(
    name: *const c_char,
    out: *mut *mut HrlabScenario,
) -> HrlabStatus {
    guard(|| {
        let s = bundled_scenario(read_str(name, "scenario name")?)?;
        put(out, Box::into_raw(Box::new(HrlabScenario(s))))
    })
}

/// # Safety
/// `s` must be NULL or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn hrlab_scenario_free(s: *mut HrlabScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Runs every check and hands back the report JSON (free it with
/// [`hrlab_string_free`]). `success` is 1 when every check met its
/// expectation.
///
/// # Safety
/// `s` must be a live handle; `report_json` and `success` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hrlab_scenario_run(
    s: *const HrlabScenario,
    report_json: *mut *mut c_char,
    success: *mut i32,
) -> HrlabStatus {
    guard(|| {
        let sc = s.as_ref().ok_or_else(|| null("scenario handle"))?;
        if report_json.is_null() || success.is_null() {
            return Err(null("output pointer"));
        }
        let out = run_scenario(&sc.0, &[])?;
        let text = CString::new(out.report.to_json()).expect("JSON has no NUL");
        put(success, i32::from(out.report.success))?;
        put(report_json, text.into_raw())
    })
}
