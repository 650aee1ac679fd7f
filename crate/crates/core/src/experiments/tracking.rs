//! Closed-loop frequency tracking: FBS estimations interleaved with Ramsey
//! verification shots, with and without feeding the estimate back.

use serde::{Deserialize, Serialize};

use super::fringe::FringeRecord;
use crate::error::{Error, Result};
use crate::estimator::{FrequencyBinarySearch, GaussianBelief, LikelihoodModel, Outcome, ProbeSettings};
use crate::sim::{
    cycle_duration, no_reset_outcome, step_noise, stream_rng, NoiseProcess, Overheads, QubitState, SimRng,
};

#[derive(Debug, Clone, PartialEq)]
pub struct TrackConfig {
    pub noise: NoiseProcess,
    /// FBS shots per estimation.
    pub shots: usize,
    /// Verification cycles per repetition, at evenly spaced evolution times.
    pub cycles: usize,
    pub tau_max: f64,
    /// Width of every estimation prior; its mean is the previous estimate.
    pub prior_sigma: f64,
    pub model: LikelihoodModel,
    pub overheads: Overheads,
    /// Number of protocol repetitions averaged into each fringe.
    pub repetitions: usize,
    /// Intended detuning of the verification shots, `df - <eps>`.
    pub target_detuning: f64,
    pub seed: u64,
}

impl TrackConfig {
    /// N = 8, sigma0 = 30 kHz, M = 50, tau in [0, 7 us], 1 MHz verification detuning.
    pub fn reference(noise: NoiseProcess, repetitions: usize, seed: u64) -> Self {
        Self {
            noise,
            shots: 8,
            cycles: 50,
            tau_max: 7e-6,
            prior_sigma: 30e3,
            model: LikelihoodModel::reference(),
            overheads: Overheads::REFERENCE,
            repetitions,
            target_detuning: 1e6,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cycles < 2 {
            return Err(Error::invalid(format!("need at least 2 verification cycles, got {}", self.cycles)));
        }
        if !(self.tau_max.is_finite() && self.tau_max > 0.0) {
            return Err(Error::invalid(format!("tau_max must be > 0, got {}", self.tau_max)));
        }
        if self.repetitions == 0 {
            return Err(Error::invalid("need at least one repetition"));
        }
        GaussianBelief::new(0.0, self.prior_sigma)?;
        self.noise.validate()?;
        self.overheads.validate()
    }

    pub fn tau_values(&self) -> Vec<f64> {
        (0..self.cycles).map(|j| self.tau_max * j as f64 / (self.cycles - 1) as f64).collect()
    }
}

/// True shift and posterior at the end of one estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub eps_true: f64,
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackResult {
    pub feedback: FringeRecord,
    pub open_loop: FringeRecord,
    pub estimates: Vec<EstimateRecord>,
}

struct Loop<'a> {
    cfg: &'a TrackConfig,
    state: QubitState,
    rng: SimRng,
}

impl Loop<'_> {
    fn shot(&mut self, probe: &ProbeSettings) -> Outcome {
        let m = no_reset_outcome(&mut self.state, probe, &self.cfg.model, &mut self.rng);
        step_noise(&self.cfg.noise, &mut self.state, cycle_duration(probe, &self.cfg.overheads), &mut self.rng);
        m
    }

    fn estimate(&mut self, prior_mu: f64) -> Result<EstimateRecord> {
        let prior = GaussianBelief::new(prior_mu, self.cfg.prior_sigma)?;
        let mut fbs = FrequencyBinarySearch::new(prior, self.cfg.model);
        for _ in 0..self.cfg.shots {
            let probe = fbs.next_probe()?;
            let m = self.shot(&probe);
            fbs.observe(m)?;
        }
        let b = fbs.belief();
        Ok(EstimateRecord { eps_true: self.state.eps_true, mu: b.mu(), sigma: b.sigma() })
    }
}

/// Runs the interleaved protocol and averages both fringes over repetitions.
///
/// Per repetition: for each verification time `tau_j`, one warm-started FBS
/// estimation followed by one Ramsey shot at `df = target + <eps>`; then the
/// open-loop arm with `df = target` (i.e. assuming `<eps> = 0`) at the same
/// times. Quasistatic noise is redrawn at the start of every repetition,
/// and the first estimation after a redraw starts from `N(0, prior_sigma^2)`.
/// All shots use the no-reset readout chain.
pub fn closed_loop_track(cfg: &TrackConfig) -> Result<TrackResult> {
    cfg.validate()?;
    let taus = cfg.tau_values();
    let mut flips_fb = vec![0usize; cfg.cycles];
    let mut flips_ol = vec![0usize; cfg.cycles];
    let mut estimates = Vec::with_capacity(cfg.repetitions * cfg.cycles);

    let mut rng = stream_rng(cfg.seed, 0);
    let state = QubitState::new(&cfg.noise, &mut rng);
    let mut lp = Loop { cfg, state, rng };
    let mut mu = 0.0;
    for rep in 0..cfg.repetitions {
        lp.rng = stream_rng(cfg.seed, rep as u64 + 1);
        if matches!(cfg.noise, NoiseProcess::Quasistatic { .. }) && rep > 0 {
            // fresh draw from the stationary law: the previous estimate says nothing about it
            lp.state.redraw(&cfg.noise, &mut lp.rng);
            mu = 0.0;
        }
        for (j, &tau) in taus.iter().enumerate() {
            let est = lp.estimate(mu)?;
            mu = est.mu;
            estimates.push(est);
            let probe = ProbeSettings::new(tau, cfg.target_detuning + mu)?;
            flips_fb[j] += usize::from(lp.shot(&probe) == Outcome::Plus);
        }
        for (j, &tau) in taus.iter().enumerate() {
            let probe = ProbeSettings::new(tau, cfg.target_detuning)?;
            flips_ol[j] += usize::from(lp.shot(&probe) == Outcome::Plus);
        }
    }
    let frac = |v: &[usize]| v.iter().map(|&c| c as f64 / cfg.repetitions as f64).collect();
    Ok(TrackResult {
        feedback: FringeRecord::new(taus.clone(), frac(&flips_fb), true)?,
        open_loop: FringeRecord::new(taus, frac(&flips_ol), false)?,
        estimates,
    })
}

/// Back-to-back warm-started estimations under a drifting shift.
pub fn track_drift(
    noise: &NoiseProcess,
    shots: usize,
    estimations: usize,
    prior_sigma: f64,
    model: &LikelihoodModel,
    overheads: &Overheads,
    seed: u64,
) -> Result<Vec<EstimateRecord>> {
    noise.validate()?;
    let cfg = TrackConfig {
        noise: noise.clone(),
        shots,
        cycles: 2,
        tau_max: 1.0,
        prior_sigma,
        model: *model,
        overheads: *overheads,
        repetitions: 1,
        target_detuning: 0.0,
        seed,
    };
    let mut rng = stream_rng(seed, 0);
    let state = QubitState::new(noise, &mut rng);
    let mut lp = Loop { cfg: &cfg, state, rng };
    let mut mu = 0.0;
    (0..estimations)
        .map(|_| {
            let est = lp.estimate(mu)?;
            mu = est.mu;
            Ok(est)
        })
        .collect()
}
