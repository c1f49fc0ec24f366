use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("quadrature did not reach tolerance {tolerance:e} (error estimate {achieved:e})")]
    Quadrature { achieved: f64, tolerance: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("root is not bracketed: f({lo}) = {f_lo:e}, f({hi}) = {f_hi:e}")]
    InvalidBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("no acceptable matches at any employer type; equilibrium has no employment")]
    NoEmployment,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("target {target} unreachable; attainable range is [{min}, {max}]")]
    Unreachable { target: f64, min: f64, max: f64 },

    #[error("clamped {fraction:.4} of cell probabilities, budget is {budget:.4}")]
    ClampBudget { fraction: f64, budget: f64 },

    #[error("data validation: {0}")]
    DataValidation(String),

    #[error("design is rank deficient; required columns dropped: {0:?}")]
    RankDeficient(Vec<String>),

    #[error("singular cross-product matrix")]
    Singular,

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code for this error: 2 for numerical failures, 3 for
    /// data validation, 1 for everything caught as bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Quadrature { .. }
            | Error::NonConvergence { .. }
            | Error::InvalidBracket { .. }
            | Error::Singular => 2,
            Error::DataValidation(_)
            | Error::RankDeficient(_)
            | Error::ClampBudget { .. }
            | Error::Io(_) => 3,
            _ => 1,
        }
    }

    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field, reason: reason.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::DataValidation(e.to_string())
    }
}
