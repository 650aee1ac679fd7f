use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Scale factor relating the median absolute deviation to a Gaussian sigma.
pub const MAD_TO_SIGMA: f64 = 1.4826;

/// Summary of estimation errors `eps_hat - eps_true` over a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub errors: Vec<f64>,
    pub mean_final_sigma: f64,
    pub std: f64,
    pub mad: f64,
    /// Fraction of runs with `|error| > 3 * final sigma`.
    pub outlier_fraction: f64,
    /// Fraction of runs with `|error| <= final sigma`.
    pub calibration_fraction: f64,
}

impl ErrorStats {
    pub fn from_runs(errors: Vec<f64>, final_sigmas: &[f64]) -> Self {
        assert_eq!(errors.len(), final_sigmas.len());
        let n = errors.len() as f64;
        let frac = |pred: &dyn Fn(f64, f64) -> bool| {
            errors.iter().zip(final_sigmas).filter(|(&e, &s)| pred(e, s)).count() as f64 / n
        };
        Self {
            mean_final_sigma: mean(final_sigmas),
            std: std_dev(&errors),
            mad: mad(&errors),
            outlier_fraction: frac(&|e, s| e.abs() > 3.0 * s),
            calibration_fraction: frac(&|e, s| e.abs() <= s),
            errors,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MadCalibration {
    /// `1.4826 * MAD`.
    pub k_times_mad: f64,
    /// `k_times_mad / mean_final_sigma`.
    pub ratio: f64,
}

/// Compares the robust error scale with the mean posterior width.
pub fn mad_calibration(stats: &ErrorStats) -> Result<MadCalibration> {
    if stats.errors.len() < 1000 {
        return Err(Error::invalid(format!("MAD calibration needs at least 1000 errors, got {}", stats.errors.len())));
    }
    let k_times_mad = MAD_TO_SIGMA * stats.mad;
    Ok(MadCalibration { k_times_mad, ratio: k_times_mad / stats.mean_final_sigma })
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation about the sample mean.
pub fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median absolute deviation about the median.
pub fn mad(xs: &[f64]) -> f64 {
    let m = median(xs);
    let dev: Vec<f64> = xs.iter().map(|x| (x - m).abs()).collect();
    median(&dev)
}

pub fn median_abs(xs: &[f64]) -> f64 {
    let abs: Vec<f64> = xs.iter().map(|x| x.abs()).collect();
    median(&abs)
}

/// Empirical quantile by linear interpolation between order statistics.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Kolmogorov-Smirnov distance between the sample and `N(0, sigma^2)`,
/// taking the supremum only over the central `mass` of the sample
/// (between its `(1-mass)/2` and `(1+mass)/2` quantiles).
pub fn ks_central_normal(xs: &[f64], sigma: f64, mass: f64) -> f64 {
    let normal = Normal::new(0.0, sigma).expect("sigma > 0");
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let lo = quantile(&v, 0.5 * (1.0 - mass));
    let hi = quantile(&v, 0.5 * (1.0 + mass));
    v.iter()
        .enumerate()
        .filter(|(_, &x)| x >= lo && x <= hi)
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}
