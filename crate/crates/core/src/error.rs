use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced by the estimation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A covariance could not be factorized or a density parameter left its domain.
    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    /// Every component assigns zero density to the observation.
    #[error("observation has zero density under every component")]
    DegeneratePoint,

    #[error("component {component} is empty (mass {mass:e})")]
    EmptyComponent { component: usize, mass: f64 },

    #[error("component {component} has a degenerate covariance (min eigenvalue {min_eigenvalue:e})")]
    DegenerateCovariance { component: usize, min_eigenvalue: f64 },

    #[error("component {component} has a degenerate rate ({rate:e})")]
    DegenerateRate { component: usize, rate: f64 },

    #[error("truncation reset failed: {0}")]
    UnrecoverableTruncation(String),

    #[error("random-partition initialization failed after {attempts} attempts")]
    InitializationFailed { attempts: usize },

    #[error("IDX parse error at byte {offset}: {message}")]
    Idx { offset: u64, message: String },

    #[error("at iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        match self {
            e @ Error::AtIteration { .. } => e,
            e => Error::AtIteration {
                iteration,
                source: Box::new(e),
            },
        }
    }

    /// True for the failures a truncated algorithm treats as "outside the region".
    pub fn is_degenerate_estimate(&self) -> bool {
        matches!(
            self,
            Error::EmptyComponent { .. }
                | Error::DegenerateCovariance { .. }
                | Error::DegenerateRate { .. }
                | Error::NumericDomain(_)
        )
    }
}
