use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("location {location} out of range for deck of size {n}")]
    LocationOutOfRange { location: usize, n: usize },

    #[error("not a permutation of 0..{n}: {reason}")]
    NotAPermutation { n: usize, reason: String },

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rule {rule} queried out of order: expected t={expected}, got t={got}")]
    OutOfOrder {
        rule: &'static str,
        expected: u64,
        got: u64,
    },

    #[error("explicit location sequence exhausted at t={t} (length {len})")]
    SequenceExhausted { t: u64, len: usize },

    #[error("{solver} did not converge after {iterations} iterations (last iterate {last}, residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        last: Complex64,
        residual: f64,
    },

    #[error("root solver collapsed onto the trivial root z = 0")]
    TrivialRoot,

    #[error("root z_n = {z_n} is {distance:e} away from seed zeta, outside radius {radius:e}")]
    RootNotLocalized {
        z_n: Complex64,
        distance: f64,
        radius: f64,
    },

    #[error("gamma = {0} has no closed-form eigenfunction; use the special eigenvectors for lambda in {{0, 1}}")]
    SpecialEigenvalue(Complex64),

    #[error("inconsistent coupled state: {0}")]
    InconsistentState(String),

    #[error("malformed marking trace: {0}")]
    MalformedTrace(String),

    #[error("rule {0} is random; exact evolution needs a deterministic or explicit-law rule")]
    RandomRule(&'static str),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid config: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("unknown experiment {name:?}; valid kinds: {valid}")]
    UnknownExperiment { name: String, valid: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
