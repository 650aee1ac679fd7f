//! Experiment harness built on the estimator, oracle and simulator.

pub mod campaign;
pub mod frequentist;
pub mod fringe;
pub mod stats;
pub mod tracking;
pub mod validity;

pub use campaign::{run_campaign, run_campaign_with_workers, CampaignConfig, CampaignResult, RunRecord};
pub use frequentist::{compare_frequentist, frequentist_estimate, ComparisonConfig, ComparisonRow};
pub use fringe::{fit_fringe, FringeFit, FringeRecord};
pub use stats::{mad_calibration, ErrorStats, MadCalibration, MAD_TO_SIGMA};
pub use tracking::{closed_loop_track, track_drift, EstimateRecord, TrackConfig, TrackResult};
pub use validity::{gaussian_validity_sweep, GridSpec, ValidityRow};

use crate::error::{Error, Result};

/// Runs `f` on a dedicated rayon pool with `workers` threads.
pub(crate) fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot build a pool of {workers} workers: {e}")))?;
    pool.install(f)
}
