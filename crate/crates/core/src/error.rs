//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures raised by the numerical routines.
///
/// Outcomes that are legitimate answers (an undetermined verdict, a degenerate
/// Hessian) are returned as values, not errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("model defect: non-finite derivative bundle at ({x}, {xp})")]
    NonFinite { x: f64, xp: f64 },

    #[error("inconsistent window: {0}")]
    InconsistentWindow(String),

    #[error("band escape: spacing {spacing} at site {site} leaves [{lo}, {hi}]")]
    BandEscape {
        site: i64,
        spacing: f64,
        lo: i64,
        hi: i64,
    },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("Newton iteration failed: {0}")]
    Newton(String),

    #[error("bracket exhausted: {0}")]
    BracketExhausted(String),

    #[error("input is not an equilibrium (residual {0:e})")]
    NotEquilibrium(f64),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("undetermined: {0}")]
    Undetermined(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::InvalidParameter(_) | Error::NonFinite { .. } => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
