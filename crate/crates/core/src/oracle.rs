//! Exact reference posterior on a uniform frequency grid.
//!
//! Used to check the closed-form moment updates and to measure how far the
//! true posterior is from its Gaussian fit (KL divergence in bits).

use crate::error::{Error, Result};
use crate::estimator::{likelihood_probability, GaussianBelief, LikelihoodModel, Outcome, ProbeSettings};

pub const DEFAULT_POINTS: usize = 1 << 14;
pub const DEFAULT_HALF_WIDTH_SIGMAS: f64 = 8.0;
pub const MIN_POINTS: usize = 1 << 10;
pub const MIN_HALF_WIDTH_SIGMAS: f64 = 6.0;

/// Discretized probability distribution over the frequency shift.
///
/// `weights[i]` is the probability mass at `origin + i * spacing`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPosterior {
    origin: f64,
    spacing: f64,
    weights: Vec<f64>,
}

impl GridPosterior {
    /// Discretizes `belief` on `points` nodes spanning `mu +- half_width_sigmas * sigma`.
    pub fn from_gaussian(belief: &GaussianBelief, half_width_sigmas: f64, points: usize) -> Result<Self> {
        if points < MIN_POINTS {
            return Err(Error::invalid(format!("grid needs at least {MIN_POINTS} points, got {points}")));
        }
        if !(half_width_sigmas >= MIN_HALF_WIDTH_SIGMAS && half_width_sigmas.is_finite()) {
            return Err(Error::invalid(format!(
                "grid must span at least +-{MIN_HALF_WIDTH_SIGMAS} sigma, got +-{half_width_sigmas}"
            )));
        }
        let half = half_width_sigmas * belief.sigma();
        let origin = belief.mu() - half;
        let spacing = 2.0 * half / (points - 1) as f64;
        if spacing.is_nan() || spacing <= 0.0 || origin + spacing == origin {
            return Err(Error::invalid(format!(
                "sigma {} too small relative to mean {} for a resolvable grid",
                belief.sigma(),
                belief.mu()
            )));
        }
        let grid = Self { origin, spacing, weights: vec![0.0; points] };
        grid.gaussian_on_grid(belief)
    }

    /// Default resolution: 2^14 points over +-8 sigma.
    pub fn with_defaults(belief: &GaussianBelief) -> Result<Self> {
        Self::from_gaussian(belief, DEFAULT_HALF_WIDTH_SIGMAS, DEFAULT_POINTS)
    }

    /// Discretizes `belief` on this grid's nodes.
    pub fn gaussian_on_grid(&self, belief: &GaussianBelief) -> Result<Self> {
        let (mu, sigma) = (belief.mu(), belief.sigma());
        let mut out = Self { origin: self.origin, spacing: self.spacing, weights: vec![1.0; self.len()] };
        out.reweight_in_place(|eps| {
            let z = (eps - mu) / sigma;
            (-0.5 * z * z).exp()
        })?;
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn eps(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    pub fn eps_values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.eps(i))
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Grid edges `(first, last)`.
    pub fn bounds(&self) -> (f64, f64) {
        (self.eps(0), self.eps(self.len() - 1))
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.origin == other.origin && self.spacing == other.spacing && self.len() == other.len()
    }

    fn reweight_in_place(&mut self, f: impl Fn(f64) -> f64) -> Result<()> {
        let (origin, spacing) = (self.origin, self.spacing);
        for (i, w) in self.weights.iter_mut().enumerate() {
            *w *= f(origin + i as f64 * spacing);
        }
        let total: f64 = self.weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::numerical(format!("grid posterior normalization vanished (total weight {total:e})")));
        }
        self.weights.iter_mut().for_each(|w| *w /= total);
        Ok(())
    }

    /// Multiplies by a non-negative function of `eps` and renormalizes.
    pub fn reweighted(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut out = self.clone();
        out.reweight_in_place(f)?;
        Ok(out)
    }

    /// Bayes update with the single-shot likelihood.
    pub fn grid_update(&self, m: Outcome, probe: &ProbeSettings, model: &LikelihoodModel) -> Result<Self> {
        self.reweighted(|eps| likelihood_probability(m, eps, probe, model))
    }

    /// `(mean, standard deviation)` by weighted sums.
    pub fn moments(&self) -> (f64, f64) {
        let mean: f64 = self.eps_values().zip(&self.weights).map(|(e, w)| w * e).sum();
        let var: f64 = self.eps_values().zip(&self.weights).map(|(e, w)| w * (e - mean).powi(2)).sum();
        (mean, var.sqrt())
    }

    /// Moment-matched Gaussian of this distribution.
    pub fn gaussian_fit(&self) -> Result<GaussianBelief> {
        let (mean, sd) = self.moments();
        GaussianBelief::new(mean, sd)
    }

    /// Number of strict local maxima among nodes whose weight exceeds
    /// `rel_floor * max_weight`. Flat runs count once.
    pub fn local_maxima(&self, rel_floor: f64) -> usize {
        let max = self.weights.iter().cloned().fold(0.0, f64::max);
        let floor = rel_floor * max;
        let mut count = 0;
        let mut rising = false;
        for pair in self.weights.windows(2) {
            let d = pair[1] - pair[0];
            if d > 0.0 {
                rising = true;
            } else if d < 0.0 {
                if rising && pair[0] > floor {
                    count += 1;
                }
                rising = false;
            }
        }
        count
    }
}

/// `sum p log2(p/q)` over a common grid, with `0 log 0 = 0`.
pub fn kl_divergence(p: &GridPosterior, q: &GridPosterior) -> Result<f64> {
    if !p.same_grid(q) {
        return Err(Error::invalid("KL divergence needs both distributions on the same grid"));
    }
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.weights.iter().zip(&q.weights).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi <= 0.0 {
            return Err(Error::numerical(format!("support mismatch: p > 0 but q = 0 at eps = {:e} Hz", p.eps(i))));
        }
        total += pi * (pi / qi).log2();
    }
    Ok(total)
}
