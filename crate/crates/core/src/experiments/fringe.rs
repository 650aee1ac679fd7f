//! Least-squares fit of a Gaussian-damped Ramsey fringe
//! `p(tau) = c + A exp(-(tau/T2)^2) cos(2 pi f tau + phi)`.

use std::f64::consts::PI;

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::storage::Owned;
use nalgebra::{DVector, Dyn, OMatrix, Vector5, U5};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Averaged verification fringe: flip fraction per evolution time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeRecord {
    pub tau_values: Vec<f64>,
    pub flip_fractions: Vec<f64>,
    pub feedback: bool,
}

impl FringeRecord {
    pub fn new(tau_values: Vec<f64>, flip_fractions: Vec<f64>, feedback: bool) -> Result<Self> {
        if tau_values.len() != flip_fractions.len() {
            return Err(Error::invalid(format!(
                "fringe has {} times but {} fractions",
                tau_values.len(),
                flip_fractions.len()
            )));
        }
        if let Some(f) = flip_fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(Error::invalid(format!("flip fraction {f} outside [0, 1]")));
        }
        Ok(Self { tau_values, flip_fractions, feedback })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub t2: f64,
    pub frequency: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub phase: f64,
    pub t2_err: f64,
    pub frequency_err: f64,
    pub amplitude_err: f64,
    pub offset_err: f64,
    pub phase_err: f64,
    pub residual_rms: f64,
}

// params: [offset, amplitude, t2, frequency, phase], times in units of the record span
struct FringeProblem<'a> {
    tau: &'a [f64],
    y: &'a [f64],
    p: Vector5<f64>,
}

impl FringeProblem<'_> {
    fn model(p: &Vector5<f64>, tau: f64) -> (f64, [f64; 5]) {
        let (c, a, t2, f, phi) = (p[0], p[1], p[2], p[3], p[4]);
        let g = (-(tau / t2).powi(2)).exp();
        let theta = 2.0 * PI * f * tau + phi;
        let (s, co) = theta.sin_cos();
        let value = c + a * g * co;
        let grad = [1.0, g * co, a * co * g * 2.0 * tau * tau / t2.powi(3), -a * g * s * 2.0 * PI * tau, -a * g * s];
        (value, grad)
    }

    fn rss(&self) -> f64 {
        self.tau.iter().zip(self.y).map(|(&t, &y)| (Self::model(&self.p, t).0 - y).powi(2)).sum()
    }
}

impl LeastSquaresProblem<f64, Dyn, U5> for FringeProblem<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, U5>;
    type ParameterStorage = Owned<f64, U5>;

    fn set_params(&mut self, p: &Vector5<f64>) {
        self.p.copy_from(p);
    }

    fn params(&self) -> Vector5<f64> {
        self.p
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        Some(DVector::from_iterator(
            self.tau.len(),
            self.tau.iter().zip(self.y).map(|(&t, &y)| Self::model(&self.p, t).0 - y),
        ))
    }

    fn jacobian(&self) -> Option<OMatrix<f64, Dyn, U5>> {
        let mut j = OMatrix::<f64, Dyn, U5>::zeros(self.tau.len());
        for (i, &t) in self.tau.iter().enumerate() {
            let (_, g) = Self::model(&self.p, t);
            for (k, v) in g.iter().enumerate() {
                j[(i, k)] = *v;
            }
        }
        Some(j)
    }
}

/// Frequency and phase of the strongest Fourier component of `y - mean`,
/// scanned on a grid 16x finer than the record's natural resolution.
fn fourier_peak(tau: &[f64], y: &[f64], mean: f64) -> (f64, f64) {
    let span =
        tau.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - tau.iter().cloned().fold(f64::INFINITY, f64::min);
    let dt = span / (tau.len() - 1) as f64;
    let f_max = 0.5 / dt;
    let df = 1.0 / (16.0 * span);
    let steps = (f_max / df).floor() as usize;
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    for k in 1..=steps {
        let f = k as f64 * df;
        let (mut re, mut im) = (0.0, 0.0);
        for (&t, &v) in tau.iter().zip(y) {
            let (s, c) = (2.0 * PI * f * t).sin_cos();
            re += (v - mean) * c;
            im -= (v - mean) * s;
        }
        let power = re * re + im * im;
        if power > best.2 {
            best = (f, im.atan2(re), power);
        }
    }
    (best.0, best.1)
}

/// Fits the Gaussian-damped fringe model to `record`.
pub fn fit_fringe(record: &FringeRecord) -> Result<FringeFit> {
    let (tau, y) = (&record.tau_values[..], &record.flip_fractions[..]);
    let n = tau.len();
    if n < 10 {
        return Err(Error::invalid(format!("fringe fit needs at least 10 points, got {n}")));
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if hi - lo <= 1e-12 * mean.abs().max(1.0) {
        return Err(Error::DegenerateFit { offset: mean, amplitude: 0.0 });
    }
    let span = tau[n - 1] - tau[0];
    let (f0, phi0) = fourier_peak(tau, y, mean);
    let scaled: Vec<f64> = tau.iter().map(|t| t / span).collect();
    let tau = &scaled[..];

    let lm = LevenbergMarquardt::new().with_patience(400);
    let mut best: Option<FringeProblem> = None;
    for t2_scale in [0.5, 0.25, 1.0, 2.0] {
        let start = FringeProblem { tau, y, p: Vector5::new(mean, 0.5 * (hi - lo), t2_scale, f0 * span, phi0) };
        let (solved, report) = lm.minimize(start);
        if !report.termination.was_successful() || !solved.p.iter().all(|v| v.is_finite()) {
            continue;
        }
        if best.as_ref().is_none_or(|b| solved.rss() < b.rss()) {
            best = Some(solved);
        }
    }
    let Some(best) = best else {
        let probe = FringeProblem { tau, y, p: Vector5::new(mean, 0.0, 1.0, f0 * span, phi0) };
        return Err(Error::FitFailed {
            reason: "no start converged".into(),
            residual_rms: (probe.rss() / n as f64).sqrt(),
        });
    };

    let rss = best.rss();
    let dof = (n - 5) as f64;
    let jac = best.jacobian().expect("jacobian always available");
    let cov = (jac.transpose() * &jac).try_inverse().ok_or_else(|| Error::FitFailed {
        reason: "singular normal matrix at the optimum".into(),
        residual_rms: (rss / n as f64).sqrt(),
    })? * (rss / dof);
    let err = |k: usize| cov[(k, k)].max(0.0).sqrt();

    // canonical form: A > 0, f > 0, T2 > 0, phase in (-pi, pi]
    let mut p = best.p;
    if p[3] < 0.0 {
        p[3] = -p[3];
        p[4] = -p[4];
    }
    if p[1] < 0.0 {
        p[1] = -p[1];
        p[4] += PI;
    }
    let phase = PI - (PI - p[4]).rem_euclid(2.0 * PI);
    Ok(FringeFit {
        offset: p[0],
        amplitude: p[1],
        t2: p[2].abs() * span,
        frequency: p[3] / span,
        phase,
        offset_err: err(0),
        amplitude_err: err(1),
        t2_err: err(2) * span,
        frequency_err: err(3) / span,
        phase_err: err(4),
        residual_rms: (rss / n as f64).sqrt(),
    })
}
