use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("propagation diverged at t = {time} (non-finite amplitude); time step too large?")]
    PropagationDiverged { time: f64 },

    #[error("imaginary-time relaxation did not converge after {iterations} iterations (last dE = {last_delta:e})")]
    ConvergenceFailure { iterations: usize, last_delta: f64 },

    #[error("invalid state: norm = {norm} deviates from 1")]
    InvalidState { norm: f64 },

    #[error("point ({x1}, {x2}) lies outside the grid")]
    OutOfDomain { x1: f64, x2: f64 },

    #[error("degenerate trace: {0}")]
    DegenerateTrace(String),

    #[error("trace rejected: {invalid} of {total} samples below the envelope floor")]
    TraceRejected { invalid: usize, total: usize },

    #[error("no valid overlapping samples in the phase window")]
    EmptyOverlap,

    #[error("insufficient statistics: {count} entries (need at least {required})")]
    InsufficientStatistics { count: usize, required: usize },

    #[error("FWHM undefined: half-maximum plateau covers {fraction:.3} of the circle")]
    UndefinedFwhm { fraction: f64 },

    #[error("numerical hermiticity violated: eigenvalue {0:e}")]
    NumericalHermiticity(f64),

    #[error("insufficient selection for channel {channel}: {count} configurations (need {required})")]
    InsufficientSelection {
        channel: String,
        count: usize,
        required: usize,
    },

    #[error("too many dead {what}: {dead} of {total}")]
    TooManyDead {
        what: &'static str,
        dead: usize,
        total: usize,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
