//! Closed-form frequency binary search (FBS).
//!
//! The belief over the frequency shift `eps` is a Gaussian `N(mu, sigma^2)`.
//! Each Ramsey probe is chosen greedily to minimize the expected posterior
//! variance: the evolution time `tau` balances the likelihood period against
//! the prior width and the coherence decay, and the detuning places the
//! likelihood inflection point on the prior mean. After an outcome `m` the
//! exact posterior is projected back onto a Gaussian by matching its first two
//! moments.
//!
//! # Sign convention
//!
//! The single-shot law is
//!
//! ```text
//! P(m | eps) = 1/2 + m/2 * (alpha + beta * exp(-tau/T) * cos(2 pi (df - eps) tau))
//! ```
//!
//! With `df = (1 + 2l) / (4 tau) + mu` the cosine becomes
//! `(-1)^l * sin(2 pi (eps - mu) tau)`, so outcome `m = +1` (with `l = 0`)
//! favours `eps > mu` and moves the mean *up*:
//!
//! ```text
//! mu'      = mu + (-1)^l * 2 pi m beta sigma^2 tau exp(-tau/T - 2 pi^2 sigma^2 tau^2) / (1 + m alpha)
//! sigma'^2 = sigma^2 - 4 pi^2 beta^2 sigma^4 tau^2 exp(-2 tau/T - 4 pi^2 sigma^2 tau^2) / (1 + m alpha)^2
//! ```
//!
//! Both lines are checked against the grid posterior in [`crate::oracle`].

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible ratio `sigma_{n+1}^2 / sigma_n^2` before clamping.
pub const VARIANCE_FLOOR_RATIO: f64 = 1e-12;

/// Gaussian belief `N(mu, sigma^2)` over the frequency shift, in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBelief {
    mu: f64,
    sigma: f64,
}

impl GaussianBelief {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::invalid(format!("belief mean must be finite, got {mu}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid(format!("belief standard deviation must be finite and > 0, got {sigma}")));
        }
        Ok(Self { mu, sigma })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }

    /// Same width, different centre. Used to warm-start consecutive estimations.
    pub fn recentered(&self, mu: f64) -> Result<Self> {
        Self::new(mu, self.sigma)
    }
}

/// SPAM and dephasing parameters of the single-shot law.
///
/// `coherence_time` may be `f64::INFINITY`, in which case the contrast does
/// not decay with `tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodModel {
    alpha: f64,
    beta: f64,
    coherence_time: f64,
}

impl LikelihoodModel {
    pub fn new(alpha: f64, beta: f64, coherence_time: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > -1.0 && alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (-1, 1), got {alpha}")));
        }
        if !(beta.is_finite() && (0.0..=1.0).contains(&beta)) {
            return Err(Error::invalid(format!("beta must lie in [0, 1], got {beta}")));
        }
        // Tiny slack so that e.g. alpha = -0.4, beta = 0.6 is not rejected by rounding.
        if alpha.abs() + beta > 1.0 + 1e-12 {
            return Err(Error::invalid(format!(
                "|alpha| + beta must be <= 1 for probabilities to stay in [0, 1], got |{alpha}| + {beta}"
            )));
        }
        if coherence_time.is_nan() || coherence_time <= 0.0 {
            return Err(Error::invalid(format!("coherence time T must be > 0 or infinite, got {coherence_time}")));
        }
        Ok(Self { alpha, beta, coherence_time })
    }

    /// Perfect preparation, readout and coherence: `alpha = 0, beta = 1, T = inf`.
    pub fn ideal() -> Self {
        Self { alpha: 0.0, beta: 1.0, coherence_time: f64::INFINITY }
    }

    /// Reference device values: `alpha = -0.02`, `beta = 0.6`, `T = 10 us`.
    pub fn reference() -> Self {
        Self { alpha: -0.02, beta: 0.6, coherence_time: 10e-6 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn coherence_time(&self) -> f64 {
        self.coherence_time
    }

    /// `1/T`, zero for infinite `T`.
    pub fn decay_rate(&self) -> f64 {
        if self.coherence_time.is_infinite() {
            0.0
        } else {
            1.0 / self.coherence_time
        }
    }

    /// Contrast `beta * exp(-tau/T)` at evolution time `tau`.
    pub fn contrast(&self, tau: f64) -> f64 {
        self.beta * (-tau * self.decay_rate()).exp()
    }
}

/// One Ramsey probe: evolution time, detuning and inflection branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSettings {
    pub tau: f64,
    pub delta_f: f64,
    pub branch: i64,
}

impl ProbeSettings {
    /// `tau = 0` is allowed so that verification fringes can start at zero
    /// evolution time; adaptive probes always have `tau > 0`.
    pub fn new(tau: f64, delta_f: f64) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::invalid(format!("evolution time must be finite and >= 0, got {tau}")));
        }
        if !delta_f.is_finite() {
            return Err(Error::invalid(format!("detuning must be finite, got {delta_f}")));
        }
        Ok(Self { tau, delta_f, branch: 0 })
    }

    /// Probe minimizing the expected posterior variance for `belief`.
    pub fn optimal(belief: &GaussianBelief, model: &LikelihoodModel, branch: i64) -> Result<Self> {
        let tau = optimal_tau(belief.sigma(), model.coherence_time())?;
        let delta_f = optimal_detuning(belief.mu(), tau, branch)?;
        Ok(Self { tau, delta_f, branch })
    }
}

/// Single-shot measurement result, `m = +1` or `m = -1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Outcome {
    Minus,
    Plus,
}

impl Outcome {
    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn from_sign(m: i64) -> Result<Self> {
        match m {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            other => Err(Error::invalid(format!("outcome must be +1 or -1, got {other}"))),
        }
    }

    pub const BOTH: [Outcome; 2] = [Outcome::Minus, Outcome::Plus];
}

impl From<Outcome> for i8 {
    fn from(m: Outcome) -> i8 {
        m.as_i8()
    }
}

impl TryFrom<i8> for Outcome {
    type Error = Error;

    fn try_from(m: i8) -> Result<Self> {
        Outcome::from_sign(m.into())
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i8())
    }
}

/// Probability of observing `m` when the true shift is `eps`.
pub fn likelihood_probability(m: Outcome, eps: f64, probe: &ProbeSettings, model: &LikelihoodModel) -> f64 {
    let phase = 2.0 * PI * (probe.delta_f - eps) * probe.tau;
    let signal = model.alpha() + model.contrast(probe.tau) * phase.cos();
    0.5 + 0.5 * m.sign() * signal
}

/// Evolution time minimizing the expected posterior variance.
///
/// Evaluated in the rationalized form `2 / (sqrt(16 pi^2 sigma^2 + 1/T^2) + 1/T)`,
/// which equals `(sqrt(16 pi^2 sigma^2 + 1/T^2) - 1/T) / (8 pi^2 sigma^2)` and
/// has no cancellation as `sigma -> 0`.
pub fn optimal_tau(sigma: f64, coherence_time: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be finite and > 0, got {sigma}")));
    }
    if coherence_time.is_nan() || coherence_time <= 0.0 {
        return Err(Error::invalid(format!("T must be > 0 or infinite, got {coherence_time}")));
    }
    let inv_t = if coherence_time.is_infinite() { 0.0 } else { 1.0 / coherence_time };
    let root = (16.0 * PI * PI * sigma * sigma + inv_t * inv_t).sqrt();
    Ok(2.0 / (root + inv_t))
}

/// Detuning placing the likelihood inflection point at the belief mean.
pub fn optimal_detuning(mu: f64, tau: f64, branch: i64) -> Result<f64> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid(format!("tau must be finite and > 0, got {tau}")));
    }
    Ok((1.0 + 2.0 * branch as f64) / (4.0 * tau) + mu)
}

/// Result of one moment-matched update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Update {
    pub belief: GaussianBelief,
    /// The posterior variance hit [`VARIANCE_FLOOR_RATIO`] and was clamped.
    pub clamped: bool,
}

/// Moment-matched Gaussian posterior after observing `m` with `probe`.
///
/// `probe` must carry the inflection detuning for `belief` (as produced by
/// [`ProbeSettings::optimal`] or [`optimal_detuning`]); its `tau` need not be optimal.
pub fn update(belief: &GaussianBelief, probe: &ProbeSettings, m: Outcome, model: &LikelihoodModel) -> Result<Update> {
    debug_assert!(
        probe.tau == 0.0
            || ((probe.delta_f - belief.mu()) * 4.0 * probe.tau - (1.0 + 2.0 * probe.branch as f64)).abs() < 1e-6,
        "probe detuning is not at the inflection point of the belief"
    );
    let (mu, sigma, tau) = (belief.mu(), belief.sigma(), probe.tau);
    let var = sigma * sigma;
    let m_sign = m.sign();
    let bias = 1.0 + m_sign * model.alpha();
    let branch_sign = if probe.branch.rem_euclid(2) == 0 { 1.0 } else { -1.0 };

    let gauss = (-2.0 * PI * PI * var * tau * tau).exp();
    let shift = 2.0 * PI * model.contrast(tau) * var * tau * gauss / bias;
    let new_mu = mu + branch_sign * m_sign * shift;
    let new_var = var - shift * shift;

    if !new_var.is_finite() || new_var <= 0.0 {
        return Err(Error::numerical(format!(
            "posterior variance radicand {new_var:e} is not positive (sigma {sigma:e}, tau {tau:e}, m {m})"
        )));
    }
    let floor = VARIANCE_FLOOR_RATIO * var;
    let (new_var, clamped) = if new_var < floor { (floor, true) } else { (new_var, false) };
    Ok(Update { belief: GaussianBelief::new(new_mu, new_var.sqrt())?, clamped })
}

/// Expected posterior variance `sum_m P(m) sigma'^2(m)` for a probe at the
/// inflection detuning with evolution time `tau`. `P(m) = (1 + m alpha)/2` there.
pub fn expected_posterior_variance(belief: &GaussianBelief, tau: f64, model: &LikelihoodModel) -> f64 {
    let var = belief.variance();
    let gain =
        4.0 * PI * PI * model.contrast(tau).powi(2) * var * var * tau * tau * (-4.0 * PI * PI * var * tau * tau).exp();
    Outcome::BOTH
        .iter()
        .map(|m| {
            let bias = 1.0 + m.sign() * model.alpha();
            0.5 * bias * (var - gain / (bias * bias))
        })
        .sum()
}

/// One row of an estimation trace. `mu` and `sigma` are the values *after* the update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub tau: f64,
    pub delta_f: f64,
    pub outcome: Outcome,
    pub mu: f64,
    pub sigma: f64,
    pub clamped: bool,
}

/// Stepwise FBS controller. Owns the current belief and the trace.
#[derive(Debug, Clone)]
pub struct FrequencyBinarySearch {
    belief: GaussianBelief,
    model: LikelihoodModel,
    branch: i64,
    trace: Vec<StepRecord>,
}

impl FrequencyBinarySearch {
    pub fn new(prior: GaussianBelief, model: LikelihoodModel) -> Self {
        Self { belief: prior, model, branch: 0, trace: Vec::new() }
    }

    pub fn with_branch(mut self, branch: i64) -> Self {
        self.branch = branch;
        self
    }

    pub fn belief(&self) -> GaussianBelief {
        self.belief
    }

    pub fn model(&self) -> &LikelihoodModel {
        &self.model
    }

    pub fn trace(&self) -> &[StepRecord] {
        &self.trace
    }

    pub fn next_probe(&self) -> Result<ProbeSettings> {
        ProbeSettings::optimal(&self.belief, &self.model, self.branch)
    }

    /// Applies outcome `m` of the probe returned by [`Self::next_probe`].
    pub fn observe(&mut self, m: Outcome) -> Result<&StepRecord> {
        let probe = self.next_probe()?;
        let upd = update(&self.belief, &probe, m, &self.model)?;
        self.belief = upd.belief;
        self.trace.push(StepRecord {
            step: self.trace.len() + 1,
            tau: probe.tau,
            delta_f: probe.delta_f,
            outcome: m,
            mu: upd.belief.mu(),
            sigma: upd.belief.sigma(),
            clamped: upd.clamped,
        });
        Ok(self.trace.last().expect("just pushed"))
    }

    pub fn into_estimation(self) -> Estimation {
        Estimation { belief: self.belief, trace: self.trace }
    }
}

/// Final belief and full per-step trace of an estimation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimation {
    pub belief: GaussianBelief,
    pub trace: Vec<StepRecord>,
}

/// An estimation run that stopped early. `partial` holds everything up to the failure.
#[derive(Debug, thiserror::Error)]
#[error("estimation aborted after {} steps: {cause}", partial.trace.len())]
pub struct Aborted {
    pub partial: Estimation,
    #[source]
    pub cause: Error,
}

/// Runs `shots` adaptive probing cycles, asking `measure` for each outcome.
pub fn run_estimation<F>(
    prior: GaussianBelief,
    shots: usize,
    model: &LikelihoodModel,
    mut measure: F,
) -> std::result::Result<Estimation, Aborted>
where
    F: FnMut(&ProbeSettings) -> Result<Outcome>,
{
    let mut fbs = FrequencyBinarySearch::new(prior, *model);
    for _ in 0..shots {
        let step = fbs.trace().len() + 1;
        let res = fbs.next_probe().and_then(|probe| {
            let m = measure(&probe).map_err(|e| match e {
                Error::OutcomeSource { .. } => e,
                other => Error::OutcomeSource { step, reason: other.to_string() },
            })?;
            fbs.observe(m).map(|_| ())
        });
        if let Err(cause) = res {
            return Err(Aborted { partial: fbs.into_estimation(), cause });
        }
    }
    Ok(fbs.into_estimation())
}
