//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors produced by the channel, capacity, reference, scheme and harness
/// operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("distribution is not normalized (sum = {sum})")]
    NotNormalized { sum: f64 },
    #[error("distribution has negative mass {value} at index {index}")]
    NegativeMass { index: usize, value: f64 },
    #[error("empty probability vector")]
    EmptyDist,
    #[error("alphabet mismatch: {left} vs {right}")]
    AlphabetMismatch { left: usize, right: usize },
    #[error("invalid alphabet size {0}")]
    InvalidAlphabet(usize),
    #[error("enumeration of {what} overflows the cap ({cap})")]
    Overflow { what: String, cap: u64 },
    #[error("symbol {symbol} is outside an alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },
    #[error("channel is not enumerable: {0}")]
    NotEnumerable(String),
    #[error("invalid beta {beta} for {states} states")]
    InvalidBeta { beta: f64, states: usize },
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("Blahut-Arimoto did not converge after {iterations} iterations (gap {gap})")]
    NonConvergence { iterations: usize, gap: f64 },
    #[error("empty channel list")]
    EmptyList,
    #[error("{messages} messages do not fit in {codewords} codewords")]
    TooManyMessages { messages: usize, codewords: u64 },
    #[error("invalid alignment geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid arguments: {0}")]
    InvalidArgs(String),
    #[error("horizon {n} is shorter than the first epoch ({min})")]
    NTooSmall { n: usize, min: usize },
    #[error("feedback budget exceeded: {requested} bits requested, {available} available")]
    BudgetExceeded { requested: u64, available: u64 },
    #[error("letter alphabet overflow: {0}")]
    AlphabetOverflow(String),
    #[error("results do not align with the schedule: {0}")]
    Misalignment(String),
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
