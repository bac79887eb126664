use thiserror::Error;

/// Errors raised by instance validation, the numerical routines and the
/// report layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probability p[{index}] = {value} lies outside [0, 1]")]
    EntryOutOfRange { index: usize, value: f64 },

    #[error("degenerate instance: every probability equals {value}, so S_n is constant")]
    DegenerateInstance { value: f64 },

    #[error("instance too short: n = {n}, need at least 2 indicators")]
    TooShort { n: usize },

    #[error("bad generator range [{low}, {high}]: need 0 <= low < high <= 1")]
    BadRange { low: f64, high: f64 },

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("reference distribution has zero mass at {index}")]
    ZeroReference { index: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("absolute continuity violated at {index}: P > 0 but Q = 0")]
    AbsoluteContinuityViolation { index: usize },

    #[error("term {index} overflows the double-precision range (log = {log_value})")]
    Overflow { index: usize, log_value: f64 },

    #[error("n = {n} exceeds the cap of {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("vector is not centered: sum = {sum:e}")]
    NotCentered { sum: f64 },

    #[error("unsupported output format `{0}` (expected json or csv)")]
    UnsupportedFormat(String),

    #[error("empty input")]
    EmptyInput,

    #[error("instance file: {0}")]
    InstanceFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
