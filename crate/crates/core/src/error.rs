use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Argument tracking could not be resolved on the nominal circle nor on
    /// either perturbed radius.
    #[error(
        "suspected zero on |z| = {radius}: perturbed counts {inner:?} (r·(1-1e-9)) and {outer:?} (r·(1+1e-9)) disagree or failed"
    )]
    BoundaryZero {
        radius: f64,
        inner: Option<usize>,
        outer: Option<usize>,
    },

    #[error("degenerate polynomial: all coefficients vanish")]
    DegeneratePolynomial,

    #[error("eigenvalue iteration did not converge for degree {degree}")]
    EigenSolver { degree: usize },

    #[error("Hermitian factorization hit a nonpositive pivot {value:e} at index {index}")]
    NonPositivePivot { index: usize, value: f64 },

    #[error("volume bound hypothesis violated: log(t^k/s) = {log_ratio} < k = {k}")]
    VolumeHypothesis { k: usize, log_ratio: f64 },

    #[error("{failed} of {samples} Monte Carlo samples failed zero counting")]
    TooManyFailures { failed: usize, samples: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numeric_failure(&self) -> bool {
        matches!(
            self,
            Error::BoundaryZero { .. }
                | Error::EigenSolver { .. }
                | Error::NonPositivePivot { .. }
                | Error::TooManyFailures { .. }
                | Error::DegeneratePolynomial
        )
    }
}
