use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The extended-precision sum left `[0, 1]`; retry with more bits.
    #[error("precision insufficient at {bits} bits (result {value:e}); retry with more bits")]
    PrecisionInsufficient { bits: u32, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-unitary gate: deviation {0:e}")]
    NonUnitary(f64),

    #[error("measurement branch with probability {0:e} selected")]
    NumericalGuard(f64),

    #[error("cannot project: success probability {0:e}")]
    CannotProject(f64),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("invalid config: {}", .0.join("; "))]
    Config(Vec<String>),

    /// A Monte Carlo trial failed; the seed replays it.
    #[error("trial {trial} of grid point {point} (seed {seed:#018x}) failed: {message}")]
    TrialFailed { point: usize, trial: u64, seed: u64, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
