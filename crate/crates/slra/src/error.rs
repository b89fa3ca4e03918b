//! Error type shared by the whole crate.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A precondition on an argument was violated (bad dimension, out-of-range
    /// parameter, non-finite input, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A basis handed to a least-squares projection is numerically
    /// ill-conditioned (estimated condition number above 1e8).
    #[error("ill-conditioned basis: {0}")]
    IllConditionedBasis(String),

    /// An internal contract between pipeline stages was violated, e.g. the
    /// deflation basis drifted past its condition-number budget.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// A computation produced non-finite values (overflow under reduced
    /// precision, a diverging iteration, ...).
    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// Gram-Schmidt deflation hit a vector that is numerically zero after
    /// projection and cannot be normalized.
    #[error("degenerate deflation: projected vector norm {0:.3e}")]
    DegenerateDeflation(f64),

    /// Crossover exponents are undefined when the multiplication exponent
    /// equals 2.
    #[error("undefined crossover: omega = 2 makes the crossover exponents infinite")]
    UndefinedCrossover,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
