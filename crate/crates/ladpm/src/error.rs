use thiserror::Error;

/// Errors produced by schedules, oracles, samplers and the analysis layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("time {t} outside the schedule domain [0, 1]")]
    Domain { t: f64 },

    #[error("time ordering violated: expected s <= t, got s = {s}, t = {t}")]
    Ordering { s: f64, t: f64 },

    #[error("degenerate time t = {t}: {reason}")]
    DegenerateTime { t: f64, reason: &'static str },

    #[error("schedule invalid: {0}")]
    ScheduleInvalid(String),

    #[error("log-SNR {value} outside the achievable range [{lo}, {hi}]")]
    LogSnrRange { value: f64, lo: f64, hi: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("interpolation nodes must be distinct (nodes {a} and {b} coincide)")]
    RepeatedNodes { a: usize, b: usize },

    #[error("stepper sequencing violated: {0}")]
    Sequencing(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 2 configuration, 4 i/o, 3 everything numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParams(_) => 2,
            Error::Io(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
