use thiserror::Error;

/// Errors raised by the toolkit. Hypothesis failures are not errors: they are
/// reported as verdicts in the corresponding reports.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown catalog id `{0}`")]
    UnknownCatalog(String),

    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),

    #[error("negative argument t = {0}")]
    NegativeArgument(f64),

    #[error("quadrature did not converge on [{a}, {b}]: achieved error estimate {error:e}")]
    QuadratureFailure { a: f64, b: f64, error: f64 },

    #[error("bracket expansion failed, last bracket [{lo:e}, {hi:e}]")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("inversion tolerance breached at t = {t:e} (residual {residual:e})")]
    InversionFailure { t: f64, residual: f64 },

    #[error("grid dimension {grid} is incompatible with model dimension {model}")]
    DimensionMismatch { grid: usize, model: usize },

    #[error("field carries no gradient values")]
    MissingGradient,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::InvalidInput(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::InvalidInput(e.to_string())
    }
}
