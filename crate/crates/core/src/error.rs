use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {family} parameter: {reason}")]
    ParameterDomain {
        family: &'static str,
        reason: String,
    },

    #[error("Kendall's tau {tau} is outside the attainable range of the {family} family")]
    TauDomain { family: &'static str, tau: f64 },

    #[error("density is undefined on the boundary of the unit cube (point {0:?})")]
    Boundary(Vec<f64>),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("estimation failed: {message}")]
    Estimation {
        message: String,
        /// (theta, mean log-likelihood) pairs visited by the optimizer.
        trace: Vec<(f64, f64)>,
    },

    #[error("degenerate box: lower corner {lo:?} is not strictly below upper corner {hi:?}")]
    DegenerateBox { lo: Vec<usize>, hi: Vec<usize> },

    #[error("box {lo:?}..{hi:?} exceeds grid resolution {p}")]
    BoxOutOfRange {
        lo: Vec<usize>,
        hi: Vec<usize>,
        p: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("instance too large: {candidates} candidate families exceeds the limit of {limit}")]
    ResourceGuard { candidates: u128, limit: u128 },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("estimation unstable: {failed} of {total} bootstrap replicates failed")]
    EstimationInstability { failed: usize, total: usize },

    #[error("study aborted: {failed} of {reps} repetitions failed")]
    StudyAborted { failed: usize, reps: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of parameter estimation, as opposed to bad input
    /// or bad configuration.
    pub fn is_estimation(&self) -> bool {
        matches!(
            self,
            Error::Estimation { .. }
                | Error::TauDomain { .. }
                | Error::EstimationInstability { .. }
        )
    }

    /// True for problems with the input data itself.
    pub fn is_data(&self) -> bool {
        matches!(
            self,
            Error::Data(_)
                | Error::InsufficientData(_)
                | Error::DimensionMismatch { .. }
                | Error::Io(_)
                | Error::Csv(_)
        )
    }
}
