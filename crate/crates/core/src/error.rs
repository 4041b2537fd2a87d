use thiserror::Error;

/// Errors shared across the crate.
///
/// Operations distinguish between *invalid arguments* (caller bugs),
/// *refusals* (the request is well-formed but cannot be answered at the
/// requested resolution or parameter range), and genuine internal failures
/// of the LP machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The request is rejected with a diagnostic, e.g. a dyadic generation
    /// finer than the grid spacing or a λ below its admissible threshold.
    #[error("refused: {0}")]
    Refusal(String),

    #[error("kernel grid too coarse: {nodes} nodes across support, need at least {min}")]
    KernelTooCoarse { nodes: usize, min: usize },

    #[error("csv format error at row {row}: {msg}")]
    CsvFormat { row: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("lp solver failed after {rounds} constraint rounds: {msg}")]
    LpFailure { rounds: usize, msg: String },

    #[error("construction failed: {0}")]
    Construction(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn refusal(msg: impl Into<String>) -> Self {
        Error::Refusal(msg.into())
    }
}
