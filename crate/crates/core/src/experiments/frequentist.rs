//! Fixed-`tau` frequentist baseline and its comparison against FBS at an
//! equal shot budget.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::median_abs;
use super::with_workers;
use crate::error::{Error, Result};
use crate::estimator::{optimal_tau, run_estimation, GaussianBelief, LikelihoodModel, ProbeSettings};
use crate::sim::{sample_outcome, stream_rng};

/// Averages `shots` outcomes at fixed `tau` with the detuning on the
/// inflection point of `eps = 0` and inverts the linearized law.
///
/// The result lies in `(-1/(2 tau), +1/(2 tau)]`; the lower edge aliases to the upper one.
pub fn frequentist_estimate<R: Rng + ?Sized>(
    eps_true: f64,
    tau: f64,
    shots: usize,
    model: &LikelihoodModel,
    rng: &mut R,
) -> Result<f64> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid(format!("tau must be > 0, got {tau}")));
    }
    if shots == 0 {
        return Err(Error::invalid("frequentist estimate needs at least one shot"));
    }
    let contrast = model.contrast(tau);
    if contrast <= 0.0 {
        return Err(Error::invalid("frequentist estimate needs non-zero contrast"));
    }
    let probe = ProbeSettings::new(tau, 1.0 / (4.0 * tau))?;
    let sum: f64 = (0..shots).map(|_| sample_outcome(eps_true, &probe, model, rng).sign()).sum();
    let mean_m = sum / shots as f64;
    let raw = (mean_m - model.alpha()) / (2.0 * PI * tau * contrast);
    let half = 1.0 / (2.0 * tau);
    Ok(if raw > half || raw <= -half { half } else { raw })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub multiplier: f64,
    pub tau: f64,
    /// `1/(2 tau)`, edge of the unambiguous range.
    pub range_half_width: f64,
    pub fbs_median_abs_error: f64,
    pub frequentist_median_abs_error: f64,
    /// Trials whose truth lies outside `(-1/(2 tau), 1/(2 tau)]`.
    pub outside_count: usize,
    pub fbs_inside_median_abs_error: f64,
    pub frequentist_inside_median_abs_error: f64,
    pub fbs_outside_median_abs_error: f64,
    pub frequentist_outside_median_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonConfig {
    pub sigma0: f64,
    pub shots: usize,
    pub multipliers: Vec<f64>,
    pub model: LikelihoodModel,
    pub trials: usize,
    pub seed: u64,
}

struct Trial {
    eps_true: f64,
    fbs_error: f64,
    frequentist_errors: Vec<f64>,
}

/// Draws `eps_true ~ N(0, sigma0^2)` per trial and estimates it with FBS
/// (prior `N(0, sigma0^2)`) and with the frequentist estimator at each
/// `tau = multiplier * tau_opt(sigma0)`, all with `shots` outcomes.
pub fn compare_frequentist(cfg: &ComparisonConfig) -> Result<Vec<ComparisonRow>> {
    if cfg.trials == 0 {
        return Err(Error::invalid("comparison needs at least one trial"));
    }
    if let Some(bad) = cfg.multipliers.iter().find(|&&k| !(k.is_finite() && k > 0.0)) {
        return Err(Error::invalid(format!("tau multipliers must be > 0, got {bad}")));
    }
    let prior = GaussianBelief::new(0.0, cfg.sigma0)?;
    let tau_opt = optimal_tau(cfg.sigma0, cfg.model.coherence_time())?;
    let taus: Vec<f64> = cfg.multipliers.iter().map(|k| k * tau_opt).collect();
    let truth = Normal::new(0.0, cfg.sigma0).map_err(|e| Error::invalid(e.to_string()))?;

    let trials = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(cfg.seed, i as u64);
            let eps_true = truth.sample(&mut rng);
            let est = run_estimation(prior, cfg.shots, &cfg.model, |probe| {
                Ok(sample_outcome(eps_true, probe, &cfg.model, &mut rng))
            })
            .map_err(|e| e.cause)?;
            let frequentist_errors = taus
                .iter()
                .map(|&tau| Ok(frequentist_estimate(eps_true, tau, cfg.shots, &cfg.model, &mut rng)? - eps_true))
                .collect::<Result<Vec<_>>>()?;
            Ok(Trial { eps_true, fbs_error: est.belief.mu() - eps_true, frequentist_errors })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(cfg
        .multipliers
        .iter()
        .zip(&taus)
        .enumerate()
        .map(|(k, (&multiplier, &tau))| {
            let half = 1.0 / (2.0 * tau);
            let inside = |t: &&Trial| t.eps_true > -half && t.eps_true <= half;
            let split = |keep_inside: bool| {
                let sel: Vec<&Trial> = trials.iter().filter(|t| inside(t) == keep_inside).collect();
                let fbs: Vec<f64> = sel.iter().map(|t| t.fbs_error).collect();
                let freq: Vec<f64> = sel.iter().map(|t| t.frequentist_errors[k]).collect();
                (sel.len(), median_abs(&fbs), median_abs(&freq))
            };
            let (_, fbs_in, freq_in) = split(true);
            let (outside_count, fbs_out, freq_out) = split(false);
            let all_fbs: Vec<f64> = trials.iter().map(|t| t.fbs_error).collect();
            let all_freq: Vec<f64> = trials.iter().map(|t| t.frequentist_errors[k]).collect();
            ComparisonRow {
                multiplier,
                tau,
                range_half_width: half,
                fbs_median_abs_error: median_abs(&all_fbs),
                frequentist_median_abs_error: median_abs(&all_freq),
                outside_count,
                fbs_inside_median_abs_error: fbs_in,
                frequentist_inside_median_abs_error: freq_in,
                fbs_outside_median_abs_error: fbs_out,
                frequentist_outside_median_abs_error: freq_out,
            }
        })
        .collect())
}

pub fn compare_frequentist_with_workers(cfg: &ComparisonConfig, workers: usize) -> Result<Vec<ComparisonRow>> {
    with_workers(workers, || compare_frequentist(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unbiased_at_zero_shift() {
        let tau = 1.6e-7;
        let shots = 100_000;
        let mut rng = stream_rng(21, 0);
        let est = frequentist_estimate(0.0, tau, shots, &LikelihoodModel::ideal(), &mut rng).unwrap();
        assert!(est.abs() < 3.0 * (1.0 / shots as f64).sqrt() / (2.0 * PI * tau), "est {est}");
    }

    #[test]
    fn small_shift_recovered() {
        let tau = 1.6e-7;
        let eps = 0.05 / tau;
        let mut rng = stream_rng(22, 0);
        let est = frequentist_estimate(eps, tau, 10_000, &LikelihoodModel::ideal(), &mut rng).unwrap();
        assert!((est / eps - 1.0).abs() < 0.1, "est {est} vs {eps}");
    }

    #[test]
    fn estimate_stays_in_range() {
        let tau = 5e-7;
        let half = 1.0 / (2.0 * tau);
        let mut rng = stream_rng(23, 0);
        for eps in [-3e6, -1e6, 0.0, 0.9e6, 2.5e6] {
            let est = frequentist_estimate(eps, tau, 3, &LikelihoodModel::reference(), &mut rng).unwrap();
            assert!(est > -half && est <= half);
        }
    }

    #[test]
    fn shift_outside_linear_range_loses_to_fbs() {
        // eps = 0.6/(2 tau) at the optimal tau for a 1 MHz prior, 15 shots each
        let model = LikelihoodModel::reference();
        let sigma0 = 1e6;
        let tau = optimal_tau(sigma0, model.coherence_time()).unwrap();
        let eps = 0.6 / (2.0 * tau);
        let prior = GaussianBelief::new(0.0, sigma0).unwrap();
        let mut fbs = Vec::new();
        let mut freq = Vec::new();
        for i in 0..400 {
            let mut rng = stream_rng(24, i);
            let est = run_estimation(prior, 15, &model, |p| Ok(sample_outcome(eps, p, &model, &mut rng))).unwrap();
            fbs.push(est.belief.mu() - eps);
            freq.push(frequentist_estimate(eps, tau, 15, &model, &mut rng).unwrap() - eps);
        }
        assert!(median_abs(&freq) > median_abs(&fbs), "freq {} fbs {}", median_abs(&freq), median_abs(&fbs));
    }

    #[test]
    fn domain_errors() {
        let mut rng = stream_rng(0, 0);
        let m = LikelihoodModel::ideal();
        assert!(frequentist_estimate(0.0, 0.0, 10, &m, &mut rng).is_err());
        assert!(frequentist_estimate(0.0, 1e-7, 0, &m, &mut rng).is_err());
    }
}
