use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{
    optimal_detuning, optimal_tau, update, GaussianBelief, LikelihoodModel, Outcome, ProbeSettings,
};
use crate::oracle::{kl_divergence, GridPosterior};

/// Relative weight below which grid nodes are ignored when counting modes.
pub const MODE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub half_width_sigmas: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { half_width_sigmas: crate::oracle::DEFAULT_HALF_WIDTH_SIGMAS, points: crate::oracle::DEFAULT_POINTS }
    }
}

/// One row of a Gaussian-validity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityRow {
    pub multiplier: f64,
    pub tau: f64,
    pub outcome: Outcome,
    /// Standard deviation of the exact grid posterior.
    pub posterior_sigma: f64,
    /// Standard deviation from the closed-form update.
    pub closed_form_sigma: f64,
    /// KL(true posterior || moment-matched Gaussian) in bits.
    pub kl_bits: f64,
    pub local_maxima: usize,
}

/// For each `tau = multiplier * tau_opt` and each outcome, compares the exact
/// posterior with its moment-matched Gaussian.
pub fn gaussian_validity_sweep(
    prior: &GaussianBelief,
    model: &LikelihoodModel,
    tau_multipliers: &[f64],
    grid: GridSpec,
) -> Result<Vec<ValidityRow>> {
    if let Some(bad) = tau_multipliers.iter().find(|&&k| !(k.is_finite() && k > 0.0)) {
        return Err(Error::invalid(format!("tau multipliers must be > 0, got {bad}")));
    }
    let tau_opt = optimal_tau(prior.sigma(), model.coherence_time())?;
    let base = GridPosterior::from_gaussian(prior, grid.half_width_sigmas, grid.points)?;
    let mut rows = Vec::with_capacity(2 * tau_multipliers.len());
    for &multiplier in tau_multipliers {
        let tau = multiplier * tau_opt;
        let probe = ProbeSettings { tau, delta_f: optimal_detuning(prior.mu(), tau, 0)?, branch: 0 };
        for m in Outcome::BOTH {
            let exact = base.grid_update(m, &probe, model)?;
            let fit = exact.gaussian_fit()?;
            let fitted = exact.gaussian_on_grid(&fit)?;
            rows.push(ValidityRow {
                multiplier,
                tau,
                outcome: m,
                posterior_sigma: fit.sigma(),
                closed_form_sigma: update(prior, &probe, m, model)?.belief.sigma(),
                kl_bits: kl_divergence(&exact, &fitted)?,
                local_maxima: exact.local_maxima(MODE_FLOOR),
            });
        }
    }
    Ok(rows)
}

/// Multipliers used when none are given: 0.25 to 4 times the optimal time.
pub fn default_multipliers() -> Vec<f64> {
    vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_outcomes_for_every_tau() {
        let prior = GaussianBelief::new(0.0, 1e6).unwrap();
        let rows =
            gaussian_validity_sweep(&prior, &LikelihoodModel::reference(), &[0.5, 1.0, 2.0], GridSpec::default())
                .unwrap();
        assert_eq!(rows.len(), 6);
        for pair in rows.chunks(2) {
            assert_eq!(pair[0].tau, pair[1].tau);
            assert_eq!(pair[0].outcome, Outcome::Minus);
            assert_eq!(pair[1].outcome, Outcome::Plus);
            for r in pair {
                assert!(r.kl_bits.is_finite() && r.kl_bits >= -1e-10);
                assert!((r.posterior_sigma / r.closed_form_sigma - 1.0).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn rejects_non_positive_multiplier() {
        let prior = GaussianBelief::new(0.0, 1e6).unwrap();
        assert!(
            gaussian_validity_sweep(&prior, &LikelihoodModel::reference(), &[1.0, 0.0], GridSpec::default()).is_err()
        );
    }
}
