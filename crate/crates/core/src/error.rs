use thiserror::Error;

/// Errors raised anywhere in the smoothing, simulation and sampling pipeline.
#[derive(Error, Debug)]
pub enum SnmError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("missing simulation parameter `{0}`; it has no default and must be supplied")]
    MissingParameter(String),

    #[error("integration diverged at t = {time}: non-finite state")]
    Divergence { time: f64 },

    #[error("regressor h{j} returned a non-finite value at row {i}")]
    NonFiniteRegressor { j: usize, i: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("chain failed at iteration {iteration}: {source}")]
    Chain {
        iteration: usize,
        #[source]
        source: Box<SnmError>,
    },

    #[error("{path}: row {row}: {message}")]
    Parse {
        path: String,
        row: usize,
        message: String,
    },

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl SnmError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        SnmError::InvalidInput(msg.into())
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            SnmError::Divergence { .. }
            | SnmError::NonFiniteRegressor { .. }
            | SnmError::Numerical(_) => true,
            SnmError::Chain { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, SnmError>;
