//! C ABI for the frequency binary search estimator.
//!
//! Every function returns an [`FbsStatus`]; results go through out-pointers.
//! On failure a message is kept per thread and can be read with
//! [`fbs_last_error_message`]. Estimators are opaque heap handles created by
//! [`fbs_estimator_new`] and released with [`fbs_estimator_free`].
//! Outcomes are `+1` / `-1` as `int8_t`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fbs_core::estimator::{self, StepRecord};
use fbs_core::{Error, FrequencyBinarySearch, GaussianBelief, LikelihoodModel, Outcome, ProbeSettings};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Numerical = 3,
    IndexOutOfRange = 4,
    Panic = 5,
}

/// Likelihood parameters. `coherence_time` may be `INFINITY`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FbsModel {
    pub alpha: f64,
    pub beta: f64,
    pub coherence_time: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FbsBelief {
    pub mu: f64,
    pub sigma: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FbsProbe {
    pub tau: f64,
    pub delta_f: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FbsStep {
    pub step: usize,
    pub tau: f64,
    pub delta_f: f64,
    pub outcome: i8,
    pub mu: f64,
    pub sigma: f64,
    /// Nonzero when the variance hit the floor on this step.
    pub clamped: u8,
}

/// Opaque estimator handle.
pub struct FbsEstimator {
    inner: FrequencyBinarySearch,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(FbsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Numerical(_) => FbsStatus::Numerical,
            _ => FbsStatus::InvalidParameter,
        };
        Failure(status, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(FbsStatus::NullPointer, format!("{name} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FbsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            FbsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            FbsStatus::Panic
        }
    }
}

unsafe fn read<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn write<T>(p: *mut T, name: &str, value: T) -> Result<(), Failure> {
    let slot = p.as_mut().ok_or_else(|| null(name))?;
    *slot = value;
    Ok(())
}

fn model(m: &FbsModel) -> Result<LikelihoodModel, Failure> {
    Ok(LikelihoodModel::new(m.alpha, m.beta, m.coherence_time)?)
}

fn outcome(m: i8) -> Result<Outcome, Failure> {
    Ok(Outcome::try_from(m)?)
}

fn step(r: &StepRecord) -> FbsStep {
    FbsStep {
        step: r.step,
        tau: r.tau,
        delta_f: r.delta_f,
        outcome: r.outcome.as_i8(),
        mu: r.mu,
        sigma: r.sigma,
        clamped: r.clamped as u8,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fbs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, empty after a success.
/// The pointer stays valid until the next `fbs_*` call on the same thread.
#[no_mangle]
pub extern "C" fn fbs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Probability of outcome `m` given shift `eps` [Hz].
///
/// # Safety
/// `probe` and `model` must point to valid structs, `out` to writable memory.
#[no_mangle]
pub unsafe extern "C" fn fbs_likelihood(
    m: i8,
    eps: f64,
    probe: *const FbsProbe,
    model: *const FbsModel,
    out: *mut f64,
) -> FbsStatus {
    guard(|| {
        let p = read(probe, "probe")?;
        let probe = ProbeSettings::new(p.tau, p.delta_f)?;
        let model = self::model(read(model, "model")?)?;
        write(out, "out", estimator::likelihood_probability(outcome(m)?, eps, &probe, &model))
    })
}

/// Optimal evolution time [s] for prior width `sigma` [Hz] and coherence time [s].
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fbs_optimal_tau(sigma: f64, coherence_time: f64, out: *mut f64) -> FbsStatus {
    guard(|| write(out, "out", estimator::optimal_tau(sigma, coherence_time)?))
}

/// Detuning [Hz] placing branch `branch` of the fringe's inflection at `mu`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fbs_optimal_detuning(mu: f64, tau: f64, branch: i64, out: *mut f64) -> FbsStatus {
    guard(|| write(out, "out", estimator::optimal_detuning(mu, tau, branch)?))
}

/// One Gaussian update. `out_clamped` may be null.
///
/// # Safety
/// Input pointers must be valid; `out` must be writable; `out_clamped` null or writable.
#[no_mangle]
pub unsafe extern "C" fn fbs_update(
    belief: *const FbsBelief,
    probe: *const FbsProbe,
    m: i8,
    model: *const FbsModel,
    out: *mut FbsBelief,
    out_clamped: *mut u8,
) -> FbsStatus {
    guard(|| {
        let b = read(belief, "belief")?;
        let belief = GaussianBelief::new(b.mu, b.sigma)?;
        let p = read(probe, "probe")?;
        let probe = ProbeSettings::new(p.tau, p.delta_f)?;
        let model = self::model(read(model, "model")?)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let u = estimator::update(&belief, &probe, outcome(m)?, &model)?;
        write(out, "out", FbsBelief { mu: u.belief.mu(), sigma: u.belief.sigma() })?;
        if !out_clamped.is_null() {
            *out_clamped = u.clamped as u8;
        }
        Ok(())
    })
}

/// Creates an estimator. On success `*out` owns a handle for [`fbs_estimator_free`].
///
/// # Safety
/// `prior` and `model` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fbs_estimator_new(
    prior: *const FbsBelief,
    model: *const FbsModel,
    branch: i64,
    out: *mut *mut FbsEstimator,
) -> FbsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let p = read(prior, "prior")?;
        let prior = GaussianBelief::new(p.mu, p.sigma)?;
        let model = self::model(read(model, "model")?)?;
        let handle = Box::new(FbsEstimator { inner: FrequencyBinarySearch::new(prior, model).with_branch(branch) });
        *out = Box::into_raw(handle);
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `est` must come from [`fbs_estimator_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fbs_estimator_free(est: *mut FbsEstimator) {
    if !est.is_null() {
        drop(Box::from_raw(est));
    }
}

/// Probe settings for the next shot.
///
/// # Safety
/// `est` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fbs_estimator_next_probe(est: *const FbsEstimator, out: *mut FbsProbe) -> FbsStatus {
    guard(|| {
        let p = read(est, "estimator")?.inner.next_probe()?;
        write(out, "out", FbsProbe { tau: p.tau, delta_f: p.delta_f })
    })
}

/// Folds in outcome `m` for the probe returned by the last
/// [`fbs_estimator_next_probe`]. `out_step` may be null. On error the
/// estimator is unchanged.
///
/// # Safety
/// `est` must be a live handle; `out_step` null or writable.
#[no_mangle]
pub unsafe extern "C" fn fbs_estimator_observe(est: *mut FbsEstimator, m: i8, out_step: *mut FbsStep) -> FbsStatus {
    guard(|| {
        let est = est.as_mut().ok_or_else(|| null("estimator"))?;
        let rec = step(est.inner.observe(outcome(m)?)?);
        if !out_step.is_null() {
            *out_step = rec;
        }
        Ok(())
    })
}

/// # Safety
/// `est` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fbs_estimator_belief(est: *const FbsEstimator, out: *mut FbsBelief) -> FbsStatus {
    guard(|| {
        let b = read(est, "estimator")?.inner.belief();
        write(out, "out", FbsBelief { mu: b.mu(), sigma: b.sigma() })
    })
}

/// Number of observed shots; 0 for a null handle.
///
/// # Safety
/// `est` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fbs_estimator_steps(est: *const FbsEstimator) -> usize {
    est.as_ref().map_or(0, |e| e.inner.trace().len())
}

/// Trace entry `index` (0-based).
///
/// # Safety
/// `est` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fbs_estimator_step(est: *const FbsEstimator, index: usize, out: *mut FbsStep) -> FbsStatus {
    guard(|| {
        let trace = read(est, "estimator")?.inner.trace();
        let rec = trace.get(index).ok_or_else(|| {
            Failure(FbsStatus::IndexOutOfRange, format!("step index {index} out of range (have {})", trace.len()))
        })?;
        write(out, "out", step(rec))
    })
}
