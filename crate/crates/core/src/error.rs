use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received a value outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A quantity that must be positive/finite was not, e.g. a vanished
    /// normalization or a negative variance radicand.
    #[error("numerical consistency error: {0}")]
    Numerical(String),

    /// The outcome source passed to an estimation run failed.
    #[error("outcome source failed at step {step}: {reason}")]
    OutcomeSource { step: usize, reason: String },

    /// The fringe model cannot be identified from the record (e.g. a flat line).
    #[error("degenerate fringe record (offset {offset}, amplitude {amplitude}): T2 and frequency are unidentifiable")]
    DegenerateFit { offset: f64, amplitude: f64 },

    #[error("fit did not converge ({reason}); residual rms {residual_rms:.3e}")]
    FitFailed { reason: String, residual_rms: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
