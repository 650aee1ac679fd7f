//! Simulated qubit: single-shot Ramsey outcomes, frequency-shift noise and
//! the no-reset readout chain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{likelihood_probability, LikelihoodModel, Outcome, ProbeSettings};

/// Random source used by every simulation in this crate.
pub type SimRng = ChaCha12Rng;

/// Independent stream `index` of the generator seeded by `master_seed`.
///
/// Streams depend only on `(master_seed, index)`, never on scheduling.
pub fn stream_rng(master_seed: u64, index: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Generator of the true frequency shift `eps(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseProcess {
    /// Constant within a run, redrawn from `N(0, sigma_eps^2)` between runs.
    Quasistatic { sigma_eps: f64 },
    /// Stationary Ornstein-Uhlenbeck process.
    OuDrift { sigma_eps: f64, correlation_time: f64 },
    /// Sum of OU components with corner frequencies log-spaced over
    /// `[f_low, f_high]` and equal variance, giving a 1/f spectrum in between.
    OneOverF { sigma_eps: f64, f_low: f64, f_high: f64, per_octave: u32 },
}

impl NoiseProcess {
    pub fn validate(&self) -> Result<()> {
        let sigma = self.sigma_eps();
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::invalid(format!("sigma_eps must be finite and >= 0, got {sigma}")));
        }
        match *self {
            NoiseProcess::Quasistatic { .. } => {}
            NoiseProcess::OuDrift { correlation_time, .. } => {
                if !(correlation_time.is_finite() && correlation_time > 0.0) {
                    return Err(Error::invalid(format!(
                        "OU correlation time must be finite and > 0, got {correlation_time}"
                    )));
                }
            }
            NoiseProcess::OneOverF { f_low, f_high, per_octave, .. } => {
                if !(f_low.is_finite() && f_low > 0.0 && f_high.is_finite() && f_high > f_low) {
                    return Err(Error::invalid(format!(
                        "1/f band must satisfy 0 < f_low < f_high, got [{f_low}, {f_high}]"
                    )));
                }
                if per_octave == 0 {
                    return Err(Error::invalid("1/f synthesis needs at least one component per octave"));
                }
            }
        }
        Ok(())
    }

    pub fn sigma_eps(&self) -> f64 {
        match *self {
            NoiseProcess::Quasistatic { sigma_eps }
            | NoiseProcess::OuDrift { sigma_eps, .. }
            | NoiseProcess::OneOverF { sigma_eps, .. } => sigma_eps,
        }
    }

    /// `(correlation_time, variance)` of each OU component. Empty for quasistatic.
    pub fn components(&self) -> Vec<(f64, f64)> {
        match *self {
            NoiseProcess::Quasistatic { .. } => Vec::new(),
            NoiseProcess::OuDrift { sigma_eps, correlation_time } => vec![(correlation_time, sigma_eps * sigma_eps)],
            NoiseProcess::OneOverF { sigma_eps, f_low, f_high, per_octave } => {
                let octaves = (f_high / f_low).log2();
                let k = ((octaves * per_octave as f64).ceil() as usize + 1).max(3);
                let var = sigma_eps * sigma_eps / k as f64;
                (0..k)
                    .map(|i| {
                        let f = f_low * (f_high / f_low).powf(i as f64 / (k - 1) as f64);
                        (1.0 / (2.0 * std::f64::consts::PI * f), var)
                    })
                    .collect()
            }
        }
    }
}

/// Qubit level, current true shift and simulated clock.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitState {
    /// Measured level after the last shot, 0 or 1.
    pub level: u8,
    pub eps_true: f64,
    /// Elapsed simulated time in seconds.
    pub clock: f64,
    components: Vec<f64>,
}

impl QubitState {
    /// Ground state with `eps_true` drawn from the stationary law of `process`.
    pub fn new<R: Rng + ?Sized>(process: &NoiseProcess, rng: &mut R) -> Self {
        let mut state = Self { level: 0, eps_true: 0.0, clock: 0.0, components: Vec::new() };
        state.redraw(process, rng);
        state
    }

    /// Fixed shift, no noise components. Useful for direct tests.
    pub fn fixed(eps_true: f64) -> Self {
        Self { level: 0, eps_true, clock: 0.0, components: Vec::new() }
    }

    /// Fresh stationary draw of the shift, as at a run boundary.
    pub fn redraw<R: Rng + ?Sized>(&mut self, process: &NoiseProcess, rng: &mut R) {
        match process {
            NoiseProcess::Quasistatic { sigma_eps } => {
                self.components.clear();
                self.eps_true = sigma_eps * normal(rng);
            }
            _ => {
                self.components = process.components().iter().map(|&(_, var)| var.sqrt() * normal(rng)).collect();
                self.eps_true = self.components.iter().sum();
            }
        }
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Advances the noise by `dt` seconds (exact OU transitions) and the clock.
pub fn step_noise<R: Rng + ?Sized>(process: &NoiseProcess, state: &mut QubitState, dt: f64, rng: &mut R) {
    debug_assert!(dt >= 0.0);
    state.clock += dt;
    if dt == 0.0 {
        return;
    }
    let comps = process.components();
    if comps.is_empty() {
        return;
    }
    if state.components.len() != comps.len() {
        state.redraw(process, rng);
        return;
    }
    for (x, &(tc, var)) in state.components.iter_mut().zip(&comps) {
        let decay = (-dt / tc).exp();
        *x = *x * decay + (var * (1.0 - decay * decay)).sqrt() * normal(rng);
    }
    state.eps_true = state.components.iter().sum();
}

/// Bernoulli draw of `m` with the single-shot law.
pub fn sample_outcome<R: Rng + ?Sized>(
    eps_true: f64,
    probe: &ProbeSettings,
    model: &LikelihoodModel,
    rng: &mut R,
) -> Outcome {
    let p_plus = likelihood_probability(Outcome::Plus, eps_true, probe, model);
    if rng.random::<f64>() < p_plus {
        Outcome::Plus
    } else {
        Outcome::Minus
    }
}

/// `m = 2|s_i - s_{i-1}| - 1`: a flip reads as `+1`, no flip as `-1`.
pub fn outcome_from_levels(previous: u8, current: u8) -> Outcome {
    if previous != current {
        Outcome::Plus
    } else {
        Outcome::Minus
    }
}

/// One shot without re-initialization: the level flips with probability
/// `P(m = +1)` and the outcome is read off the level change.
pub fn no_reset_outcome<R: Rng + ?Sized>(
    state: &mut QubitState,
    probe: &ProbeSettings,
    model: &LikelihoodModel,
    rng: &mut R,
) -> Outcome {
    let previous = state.level;
    let flip = sample_outcome(state.eps_true, probe, model, rng) == Outcome::Plus;
    if flip {
        state.level ^= 1;
    }
    outcome_from_levels(previous, state.level)
}

/// Fixed per-shot overheads in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overheads {
    pub readout: f64,
    pub depletion: f64,
}

impl Overheads {
    /// 1.44 us readout and 2 us resonator depletion.
    pub const REFERENCE: Overheads = Overheads { readout: 1.44e-6, depletion: 2.0e-6 };
    pub const NONE: Overheads = Overheads { readout: 0.0, depletion: 0.0 };

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("readout", self.readout), ("depletion", self.depletion)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} overhead must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Wall time of one probing cycle.
pub fn cycle_duration(probe: &ProbeSettings, overheads: &Overheads) -> f64 {
    probe.tau + overheads.readout + overheads.depletion
}
