//! Frequency binary search: adaptive Bayesian estimation of a qubit's
//! frequency shift from single-shot Ramsey measurements.
//!
//! * [`estimator`] closed-form probe selection and Gaussian updates
//! * [`oracle`] exact grid posterior, moments and KL divergence
//! * [`sim`] simulated qubit, noise processes and the no-reset readout chain
//! * [`experiments`] Monte Carlo campaigns, validity sweeps, closed-loop tracking
//! * [`cli`] scenario parsing, execution and self-describing output files

pub mod cli;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod oracle;
pub mod sim;

pub use error::{Error, Result};
pub use estimator::{
    likelihood_probability, optimal_detuning, optimal_tau, run_estimation, update, Estimation, FrequencyBinarySearch,
    GaussianBelief, LikelihoodModel, Outcome, ProbeSettings, StepRecord,
};
pub use oracle::{kl_divergence, GridPosterior};
