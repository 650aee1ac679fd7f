//! Command-line front end: `estimate`, `campaign`, `validate-gaussian`,
//! `track` and `compare-frequentist`.
//!
//! Exit codes: 0 success, 1 invalid arguments or configuration, 2 runtime error.

pub mod output;
pub mod scenario;

use std::ffi::OsString;
use std::path::PathBuf;

use serde::Serialize;

pub use output::{data_section, read_scenario, scenario_from_text};
pub use scenario::{parse_scenario, Command, Format, Invocation, NoiseKind, Params, ParseFailure, Scenario};

use crate::error::{Error, Result};
use crate::estimator::run_estimation;
use crate::experiments::{
    self, closed_loop_track, fit_fringe, gaussian_validity_sweep, mad_calibration, ComparisonConfig, ErrorStats,
    FringeFit, GridSpec, TrackConfig,
};
use crate::sim::{sample_outcome, stream_rng};
use output::{render, render_summary, schema, summary_path, write_file, Cell, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// Paths written by one execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Written {
    pub data: PathBuf,
    pub summary: Option<PathBuf>,
}

fn f(v: f64) -> Cell {
    Cell::Float(v)
}

fn i(v: impl TryInto<i64>) -> Cell {
    Cell::Int(v.try_into().unwrap_or(i64::MAX))
}

#[derive(Serialize)]
struct CampaignSummary<'a> {
    #[serde(flatten)]
    stats: &'a ErrorStats,
    k_times_mad: Option<f64>,
    mad_ratio: Option<f64>,
}

#[derive(Serialize)]
struct FitSummary {
    fit: Option<FringeFit>,
    error: Option<String>,
}

impl From<Result<FringeFit>> for FitSummary {
    fn from(r: Result<FringeFit>) -> Self {
        match r {
            Ok(fit) => Self { fit: Some(fit), error: None },
            Err(e) => Self { fit: None, error: Some(e.to_string()) },
        }
    }
}

#[derive(Serialize)]
struct TrackSummary {
    feedback: FitSummary,
    open_loop: FitSummary,
    estimations: usize,
    median_abs_estimation_error_hz: f64,
}

/// Runs the scenario and writes its output files.
pub fn execute(scenario: &Scenario, workers: Option<usize>) -> Result<Written> {
    let prior = scenario.prior()?;
    let model = scenario.update_model()?;
    let p = &scenario.params;
    let mut summary = None;
    let table = match scenario.command {
        Command::Estimate => {
            let truth = scenario.truth_model()?;
            let mut rng = stream_rng(scenario.seed, 0);
            let est =
                run_estimation(prior, p.n, &model, |probe| Ok(sample_outcome(p.eps_true, probe, &truth, &mut rng)))
                    .map_err(|e| e.cause)?;
            let mut t = Table::new(schema::TRACE);
            for r in &est.trace {
                t.push(vec![i(r.step), f(r.tau), f(r.delta_f), i(r.outcome.as_i8()), f(r.mu), f(r.sigma)]);
            }
            t
        }
        Command::Campaign => {
            let cfg = experiments::CampaignConfig {
                run_count: p.runs,
                shots: p.n,
                prior,
                truth_model: scenario.truth_model()?,
                update_model: model,
                noise: scenario.noise(),
                overheads: scenario.overheads(),
                master_seed: scenario.seed,
            };
            let res = match workers {
                Some(w) => experiments::run_campaign_with_workers(&cfg, w)?,
                None => experiments::run_campaign(&cfg)?,
            };
            let cal = mad_calibration(&res.stats).ok();
            let s = CampaignSummary {
                stats: &res.stats,
                k_times_mad: cal.map(|c| c.k_times_mad),
                mad_ratio: cal.map(|c| c.ratio),
            };
            summary = Some(render_summary(scenario, schema::SUMMARY_CAMPAIGN, &s)?);
            let mut t = Table::new(schema::CAMPAIGN);
            for r in &res.runs {
                t.push(vec![i(r.run), f(r.eps_true), f(r.eps_hat), f(r.final_sigma)]);
            }
            t
        }
        Command::ValidateGaussian => {
            let grid = GridSpec { half_width_sigmas: p.grid_half_width, points: p.grid_points };
            let rows = gaussian_validity_sweep(&prior, &model, &p.tau_multipliers, grid)?;
            let mut t = Table::new(schema::VALIDITY);
            for r in rows {
                t.push(vec![
                    f(r.multiplier),
                    f(r.tau),
                    i(r.outcome.as_i8()),
                    f(r.posterior_sigma),
                    f(r.closed_form_sigma),
                    f(r.kl_bits),
                    i(r.local_maxima),
                ]);
            }
            t
        }
        Command::Track => {
            let cfg = TrackConfig {
                noise: scenario.noise(),
                shots: p.n,
                cycles: p.cycles,
                tau_max: p.tau_max,
                prior_sigma: p.sigma0,
                model,
                overheads: scenario.overheads(),
                repetitions: p.repetitions,
                target_detuning: p.target_detuning,
                seed: scenario.seed,
            };
            let res = closed_loop_track(&cfg)?;
            let errs: Vec<f64> = res.estimates.iter().map(|e| e.mu - e.eps_true).collect();
            let s = TrackSummary {
                feedback: fit_fringe(&res.feedback).into(),
                open_loop: fit_fringe(&res.open_loop).into(),
                estimations: res.estimates.len(),
                median_abs_estimation_error_hz: experiments::stats::median_abs(&errs),
            };
            summary = Some(render_summary(scenario, schema::SUMMARY_TRACK, &s)?);
            let mut t = Table::new(schema::TRACK);
            for ((tau, a), b) in
                res.feedback.tau_values.iter().zip(&res.feedback.flip_fractions).zip(&res.open_loop.flip_fractions)
            {
                t.push(vec![f(*tau), f(*a), f(*b)]);
            }
            t
        }
        Command::CompareFrequentist => {
            let cfg = ComparisonConfig {
                sigma0: p.sigma0,
                shots: p.n,
                multipliers: p.tau_multipliers.clone(),
                model,
                trials: p.runs,
                seed: scenario.seed,
            };
            let rows = match workers {
                Some(w) => experiments::frequentist::compare_frequentist_with_workers(&cfg, w)?,
                None => experiments::compare_frequentist(&cfg)?,
            };
            let mut t = Table::new(schema::COMPARE);
            for r in rows {
                t.push(vec![
                    f(r.multiplier),
                    f(r.tau),
                    f(r.range_half_width),
                    f(r.fbs_median_abs_error),
                    f(r.frequentist_median_abs_error),
                    i(r.outside_count),
                    f(r.fbs_inside_median_abs_error),
                    f(r.frequentist_inside_median_abs_error),
                    f(r.fbs_outside_median_abs_error),
                    f(r.frequentist_outside_median_abs_error),
                ]);
            }
            t
        }
    };

    write_file(&scenario.output, &render(&table, scenario, scenario.format))?;
    let summary_file = match summary {
        Some(text) => {
            let path = summary_path(&scenario.output);
            write_file(&path, &text)?;
            Some(path)
        }
        None => None,
    };
    Ok(Written { data: scenario.output.clone(), summary: summary_file })
}

/// Full CLI entry point; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let inv = match parse_scenario(args) {
        Ok(inv) => inv,
        Err(ParseFailure::Clap(e)) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
        Err(ParseFailure::Invalid(e)) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    match execute(&inv.scenario, inv.workers) {
        Ok(w) => {
            eprintln!("wrote {}", w.data.display());
            if let Some(s) = w.summary {
                eprintln!("wrote {}", s.display());
            }
            EXIT_OK
        }
        Err(e @ Error::InvalidParameter(_)) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}
