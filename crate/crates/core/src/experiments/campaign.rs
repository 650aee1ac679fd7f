use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::ErrorStats;
use super::with_workers;
use crate::error::{Error, Result};
use crate::estimator::{run_estimation, GaussianBelief, LikelihoodModel};
use crate::sim::{cycle_duration, sample_outcome, step_noise, stream_rng, NoiseProcess, Overheads, QubitState};

/// Monte Carlo campaign of independent estimations.
///
/// Truths are drawn as `prior.mu + eps` with `eps` from the stationary law of
/// `noise`; by default that is `N(0, prior.sigma^2)`, i.e. the prior itself.
/// Outcomes come from `truth_model` while the estimator assumes `update_model`.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub run_count: usize,
    pub shots: usize,
    pub prior: GaussianBelief,
    pub truth_model: LikelihoodModel,
    pub update_model: LikelihoodModel,
    pub noise: NoiseProcess,
    pub overheads: Overheads,
    pub master_seed: u64,
}

impl CampaignConfig {
    pub fn new(
        run_count: usize,
        shots: usize,
        prior: GaussianBelief,
        model: LikelihoodModel,
        master_seed: u64,
    ) -> Self {
        Self {
            run_count,
            shots,
            prior,
            truth_model: model,
            update_model: model,
            noise: NoiseProcess::Quasistatic { sigma_eps: prior.sigma() },
            overheads: Overheads::REFERENCE,
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.run_count == 0 {
            return Err(Error::invalid("campaign needs run_count >= 1"));
        }
        self.noise.validate()?;
        self.overheads.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub eps_true: f64,
    pub eps_hat: f64,
    pub final_sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub runs: Vec<RunRecord>,
    pub stats: ErrorStats,
}

/// Runs one estimation of the campaign. Depends only on `(cfg, run)`.
pub fn simulate_run(cfg: &CampaignConfig, run: usize) -> Result<RunRecord> {
    let mut rng = stream_rng(cfg.master_seed, run as u64);
    let mut state = QubitState::new(&cfg.noise, &mut rng);
    let offset = cfg.prior.mu();
    let est = run_estimation(cfg.prior, cfg.shots, &cfg.update_model, |probe| {
        let m = sample_outcome(offset + state.eps_true, probe, &cfg.truth_model, &mut rng);
        step_noise(&cfg.noise, &mut state, cycle_duration(probe, &cfg.overheads), &mut rng);
        Ok(m)
    })
    .map_err(|e| Error::numerical(format!("campaign run {run}: {e}")))?;
    Ok(RunRecord { run, eps_true: offset + state.eps_true, eps_hat: est.belief.mu(), final_sigma: est.belief.sigma() })
}

/// Runs the campaign on the global thread pool.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignResult> {
    cfg.validate()?;
    let runs = (0..cfg.run_count).into_par_iter().map(|run| simulate_run(cfg, run)).collect::<Result<Vec<_>>>()?;
    let errors = runs.iter().map(|r| r.eps_hat - r.eps_true).collect();
    let sigmas: Vec<f64> = runs.iter().map(|r| r.final_sigma).collect();
    Ok(CampaignResult { stats: ErrorStats::from_runs(errors, &sigmas), runs })
}

/// Same as [`run_campaign`] on a dedicated pool of `workers` threads.
/// The result does not depend on `workers`.
pub fn run_campaign_with_workers(cfg: &CampaignConfig, workers: usize) -> Result<CampaignResult> {
    with_workers(workers, || run_campaign(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_shots_reproduces_prior_spread() {
        let prior = GaussianBelief::new(0.0, 1e6).unwrap();
        let cfg = CampaignConfig::new(5000, 0, prior, LikelihoodModel::reference(), 1);
        let res = run_campaign(&cfg).unwrap();
        assert!((res.stats.std / 1e6 - 1.0).abs() < 0.05, "std {}", res.stats.std);
        assert!(res.runs.iter().all(|r| r.eps_hat == 0.0 && r.final_sigma == 1e6));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let prior = GaussianBelief::new(2e5, 1e6).unwrap();
        let cfg = CampaignConfig::new(300, 15, prior, LikelihoodModel::reference(), 77);
        let a = run_campaign_with_workers(&cfg, 1).unwrap();
        let b = run_campaign_with_workers(&cfg, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_empty_campaign() {
        let prior = GaussianBelief::new(0.0, 1e6).unwrap();
        let cfg = CampaignConfig::new(0, 15, prior, LikelihoodModel::ideal(), 1);
        assert!(run_campaign(&cfg).is_err());
    }
}
