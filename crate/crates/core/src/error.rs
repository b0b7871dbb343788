use thiserror::Error;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("newton iteration did not converge on branch {branch} after {iterations} iterations (|f| = {residual:e})")]
    NumericFailure {
        branch: String,
        iterations: usize,
        residual: f64,
    },

    #[error("non-contractive exponent: Re(lambda) = {0} must exceed 1/2")]
    NonContractive(f64),

    #[error("degenerate recursion coefficient at order {p}: |1 - 2E B^(lambda p)| = {value:e}")]
    DegenerateCoefficient { p: usize, value: f64 },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("phase mismatch: {0}")]
    PhaseMismatch(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// Numeric failures are reported separately from usage errors by the CLI.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NumericFailure { .. } | Error::DegenerateCoefficient { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
