use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{GaussianBelief, LikelihoodModel};
use crate::experiments::validity::default_multipliers;
use crate::oracle::{MIN_HALF_WIDTH_SIGMAS, MIN_POINTS};
use crate::sim::{stream_rng, NoiseProcess, Overheads};

/// Environment variable naming the directory for outputs without `--output`.
pub const OUTPUT_DIR_ENV: &str = "FBS_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Estimate,
    Campaign,
    ValidateGaussian,
    Track,
    CompareFrequentist,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Estimate => "estimate",
            Command::Campaign => "campaign",
            Command::ValidateGaussian => "validate-gaussian",
            Command::Track => "track",
            Command::CompareFrequentist => "compare-frequentist",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    Quasistatic,
    Ou,
    OneOverF,
}

/// Serializes infinite coherence times as the string `"inf"`.
mod time_or_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse::<f64>().map_err(serde::de::Error::custom),
        }
    }
}

/// Fully resolved parameter set. Every command carries all of them so that
/// output headers are complete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub mu0: f64,
    pub sigma0: f64,
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    #[serde(with = "time_or_inf")]
    pub coherence_time: f64,
    pub truth_alpha: f64,
    pub truth_beta: f64,
    #[serde(with = "time_or_inf")]
    pub truth_coherence_time: f64,
    pub eps_true: f64,
    pub runs: usize,
    pub noise: NoiseKind,
    pub sigma_eps: f64,
    pub correlation_time: f64,
    pub f_low: f64,
    pub f_high: f64,
    pub per_octave: u32,
    pub cycles: usize,
    pub tau_max: f64,
    pub repetitions: usize,
    pub target_detuning: f64,
    pub readout: f64,
    pub depletion: f64,
    pub tau_multipliers: Vec<f64>,
    pub grid_points: usize,
    pub grid_half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub command: Command,
    pub seed: u64,
    pub format: Format,
    pub output: PathBuf,
    pub params: Params,
}

impl Scenario {
    pub fn update_model(&self) -> Result<LikelihoodModel> {
        let p = &self.params;
        LikelihoodModel::new(p.alpha, p.beta, p.coherence_time)
    }

    pub fn truth_model(&self) -> Result<LikelihoodModel> {
        let p = &self.params;
        LikelihoodModel::new(p.truth_alpha, p.truth_beta, p.truth_coherence_time)
            .map_err(|e| Error::invalid(format!("truth model: {e}")))
    }

    pub fn prior(&self) -> Result<GaussianBelief> {
        GaussianBelief::new(self.params.mu0, self.params.sigma0)
    }

    pub fn noise(&self) -> NoiseProcess {
        let p = &self.params;
        match p.noise {
            NoiseKind::Quasistatic => NoiseProcess::Quasistatic { sigma_eps: p.sigma_eps },
            NoiseKind::Ou => NoiseProcess::OuDrift { sigma_eps: p.sigma_eps, correlation_time: p.correlation_time },
            NoiseKind::OneOverF => NoiseProcess::OneOverF {
                sigma_eps: p.sigma_eps,
                f_low: p.f_low,
                f_high: p.f_high,
                per_octave: p.per_octave,
            },
        }
    }

    pub fn overheads(&self) -> Overheads {
        Overheads { readout: self.params.readout, depletion: self.params.depletion }
    }

    /// Checks every documented range. Messages name the offending key.
    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be a finite number > 0, got {v}")))
            }
        };
        let non_negative = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be a finite number >= 0, got {v}")))
            }
        };
        if !p.mu0.is_finite() {
            return Err(Error::invalid(format!("mu0 must be finite, got {}", p.mu0)));
        }
        positive("sigma0", p.sigma0)?;
        if p.n > 100_000 {
            return Err(Error::invalid(format!("n must be <= 100000, got {}", p.n)));
        }
        self.update_model()?;
        self.truth_model()?;
        if !p.eps_true.is_finite() {
            return Err(Error::invalid(format!("eps_true must be finite, got {}", p.eps_true)));
        }
        if p.runs == 0 {
            return Err(Error::invalid("runs must be >= 1"));
        }
        self.noise().validate()?;
        if p.cycles < 2 {
            return Err(Error::invalid(format!("cycles must be >= 2, got {}", p.cycles)));
        }
        positive("tau_max", p.tau_max)?;
        if p.repetitions == 0 {
            return Err(Error::invalid("repetitions must be >= 1"));
        }
        if !p.target_detuning.is_finite() {
            return Err(Error::invalid("target_detuning must be finite"));
        }
        non_negative("readout", p.readout)?;
        non_negative("depletion", p.depletion)?;
        if p.tau_multipliers.is_empty() {
            return Err(Error::invalid("tau_multipliers must not be empty"));
        }
        for &k in &p.tau_multipliers {
            positive("each tau_multipliers entry", k)?;
        }
        if p.grid_points < MIN_POINTS {
            return Err(Error::invalid(format!("grid_points must be >= {MIN_POINTS}, got {}", p.grid_points)));
        }
        if p.grid_half_width.is_nan() || p.grid_half_width < MIN_HALF_WIDTH_SIGMAS {
            return Err(Error::invalid(format!(
                "grid_half_width must be >= {MIN_HALF_WIDTH_SIGMAS}, got {}",
                p.grid_half_width
            )));
        }
        Ok(())
    }
}

/// Overrides shared by every subcommand. Unset values fall back to the
/// config file, then to defaults.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Output file (default: $FBS_OUTPUT_DIR/<command>.<ext>)
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Prior mean [Hz]
    #[arg(long, allow_hyphen_values = true)]
    pub mu0: Option<f64>,
    /// Prior standard deviation [Hz]
    #[arg(long)]
    pub sigma0: Option<f64>,
    /// Shots per estimation
    #[arg(long)]
    pub n: Option<usize>,
    /// Readout bias assumed by the estimator
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Visibility assumed by the estimator
    #[arg(long)]
    pub beta: Option<f64>,
    /// Coherence time T assumed by the estimator [s], `inf` allowed
    #[arg(long)]
    pub coherence_time: Option<f64>,
    /// Data-generating alpha (default: same as --alpha)
    #[arg(long, allow_hyphen_values = true)]
    pub truth_alpha: Option<f64>,
    #[arg(long)]
    pub truth_beta: Option<f64>,
    #[arg(long)]
    pub truth_coherence_time: Option<f64>,
    /// True shift for `estimate` [Hz] (default: drawn from the prior with the seed)
    #[arg(long, allow_hyphen_values = true)]
    pub eps_true: Option<f64>,
    /// Monte Carlo runs / trials
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long, value_enum)]
    pub noise: Option<NoiseKind>,
    /// Noise scale [Hz]
    #[arg(long)]
    pub sigma_eps: Option<f64>,
    /// OU correlation time [s]
    #[arg(long)]
    pub correlation_time: Option<f64>,
    /// 1/f band lower edge [Hz]
    #[arg(long)]
    pub f_low: Option<f64>,
    /// 1/f band upper edge [Hz]
    #[arg(long)]
    pub f_high: Option<f64>,
    #[arg(long)]
    pub per_octave: Option<u32>,
    /// Verification cycles per repetition
    #[arg(long)]
    pub cycles: Option<usize>,
    /// Longest verification evolution time [s]
    #[arg(long)]
    pub tau_max: Option<f64>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// Verification detuning [Hz]
    #[arg(long, allow_hyphen_values = true)]
    pub target_detuning: Option<f64>,
    /// Readout duration [s]
    #[arg(long)]
    pub readout: Option<f64>,
    /// Resonator depletion duration [s]
    #[arg(long)]
    pub depletion: Option<f64>,
    /// Comma-separated multiples of the optimal tau
    #[arg(long, value_delimiter = ',')]
    pub tau_multipliers: Option<Vec<f64>>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Grid half width in prior sigmas
    #[arg(long)]
    pub grid_half_width: Option<f64>,
}

macro_rules! merge_fields {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl Overrides {
    /// `other` wins wherever it is set.
    pub fn overlay(mut self, other: &Overrides) -> Self {
        merge_fields!(self, other; output, seed, format, mu0, sigma0, n, alpha, beta, coherence_time,
            truth_alpha, truth_beta, truth_coherence_time, eps_true, runs, noise, sigma_eps,
            correlation_time, f_low, f_high, per_octave, cycles, tau_max, repetitions,
            target_detuning, readout, depletion, tau_multipliers, grid_points, grid_half_width);
        self
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        toml::from_str(&text).map_err(|e| Error::invalid(format!("config {}: {}", path.display(), e.message())))
    }

    /// Fills every unset value with the command's default.
    pub fn resolve(&self, command: Command, output_dir: Option<&Path>) -> Result<Scenario> {
        let track = command == Command::Track;
        let seed = self.seed.unwrap_or(0);
        let format = self.format.unwrap_or_default();
        let mu0 = self.mu0.unwrap_or(0.0);
        let sigma0 = self.sigma0.unwrap_or(if track { 30e3 } else { 1e6 });
        let reference = LikelihoodModel::reference();
        let alpha = self.alpha.unwrap_or(reference.alpha());
        let beta = self.beta.unwrap_or(reference.beta());
        let coherence_time = self.coherence_time.unwrap_or(reference.coherence_time());
        let eps_true = match self.eps_true {
            Some(e) => e,
            None => {
                let prior = Normal::new(mu0, sigma0)
                    .map_err(|_| Error::invalid(format!("sigma0 must be a finite number > 0, got {sigma0}")))?;
                prior.sample(&mut stream_rng(seed, u64::MAX))
            }
        };
        let output = match &self.output {
            Some(p) => p.clone(),
            None => output_dir.unwrap_or(Path::new(".")).join(format!("{}.{}", command.name(), format.extension())),
        };
        let tau_multipliers = self.tau_multipliers.clone().unwrap_or_else(|| match command {
            Command::CompareFrequentist => vec![0.5, 1.0, 2.0, 4.0],
            _ => default_multipliers(),
        });
        let params = Params {
            mu0,
            sigma0,
            n: self.n.unwrap_or(if track { 8 } else { 15 }),
            alpha,
            beta,
            coherence_time,
            truth_alpha: self.truth_alpha.unwrap_or(alpha),
            truth_beta: self.truth_beta.unwrap_or(beta),
            truth_coherence_time: self.truth_coherence_time.unwrap_or(coherence_time),
            eps_true,
            runs: self.runs.unwrap_or(if command == Command::CompareFrequentist { 2000 } else { 5000 }),
            noise: self.noise.unwrap_or(NoiseKind::Quasistatic),
            sigma_eps: self.sigma_eps.unwrap_or(if track { 30e3 } else { sigma0 }),
            correlation_time: self.correlation_time.unwrap_or(1e-2),
            f_low: self.f_low.unwrap_or(1.0),
            f_high: self.f_high.unwrap_or(1e4),
            per_octave: self.per_octave.unwrap_or(1),
            cycles: self.cycles.unwrap_or(50),
            tau_max: self.tau_max.unwrap_or(7e-6),
            repetitions: self.repetitions.unwrap_or(200),
            target_detuning: self.target_detuning.unwrap_or(1e6),
            readout: self.readout.unwrap_or(Overheads::REFERENCE.readout),
            depletion: self.depletion.unwrap_or(Overheads::REFERENCE.depletion),
            tau_multipliers,
            grid_points: self.grid_points.unwrap_or(crate::oracle::DEFAULT_POINTS),
            grid_half_width: self.grid_half_width.unwrap_or(crate::oracle::DEFAULT_HALF_WIDTH_SIGMAS),
        };
        let scenario = Scenario { command, seed, format, output, params };
        scenario.validate()?;
        Ok(scenario)
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommandArgs {
    /// TOML file with any of the flag names (snake_case) as keys
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads for Monte Carlo commands (results do not depend on it)
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// One simulated estimation; writes the per-step trace
    Estimate(CommandArgs),
    /// Monte Carlo estimation-error campaign; per-run rows plus a summary JSON
    Campaign(CommandArgs),
    /// Exact posterior vs Gaussian fit across evolution times
    ValidateGaussian(CommandArgs),
    /// Closed-loop tracking with and without feedback; averaged fringes plus fits
    Track(CommandArgs),
    /// FBS against the fixed-tau frequentist estimator at equal shot budget
    CompareFrequentist(CommandArgs),
}

#[derive(Debug, Parser)]
#[command(name = "fbs", version, about = "Frequency binary search estimator and simulation harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

/// Parsed invocation: resolved scenario plus execution-only options.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub scenario: Scenario,
    pub workers: Option<usize>,
}

/// Resolves a command line. Precedence: flags, then config file, then defaults.
pub fn parse_scenario<I, T>(args: I) -> std::result::Result<Invocation, ParseFailure>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(ParseFailure::Clap)?;
    let (command, args) = match cli.command {
        CliCommand::Estimate(a) => (Command::Estimate, a),
        CliCommand::Campaign(a) => (Command::Campaign, a),
        CliCommand::ValidateGaussian(a) => (Command::ValidateGaussian, a),
        CliCommand::Track(a) => (Command::Track, a),
        CliCommand::CompareFrequentist(a) => (Command::CompareFrequentist, a),
    };
    let from_file = match &args.config {
        Some(path) => Overrides::from_toml_file(path).map_err(ParseFailure::Invalid)?,
        None => Overrides::default(),
    };
    let merged = from_file.overlay(&args.overrides);
    let env_dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
    let scenario = merged.resolve(command, env_dir.as_deref()).map_err(ParseFailure::Invalid)?;
    if args.workers == Some(0) {
        return Err(ParseFailure::Invalid(Error::invalid("workers must be >= 1")));
    }
    Ok(Invocation { scenario, workers: args.workers })
}

#[derive(Debug)]
pub enum ParseFailure {
    Clap(clap::Error),
    Invalid(Error),
}
