use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("row {row} sums to {sum}, expected 1")]
    NonStochasticRow { row: usize, sum: f64 },
    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("eta = {eta} must lie in [0, 1/{outputs})")]
    BadEta { eta: f64, outputs: usize },
    #[error("alpha = {0} must lie in (0, 1]")]
    BadAlpha(f64),
    #[error("delta = {0} out of range")]
    BadDelta(f64),
    #[error("eps = {0} out of range")]
    BadEps(f64),
    #[error("y = {y} outside (0, {max}]")]
    BadY { y: f64, max: f64 },
    #[error("input symbol {0} was never sent")]
    EmptyRow(usize),
    #[error("degenerate alphabet: {0}")]
    Degenerate(String),
    #[error("channels do not share alphabets: {0}")]
    AlphabetMismatch(String),
    #[error("empty channel set")]
    EmptySet,
    #[error("channel index {index} out of range for {len} channels")]
    BadIndex { index: usize, len: usize },
    #[error("best channel is not unique: channels {first} and {second} within 1e-9")]
    NonUniqueBest { first: usize, second: usize },
    #[error("permutation search too large: {0} candidates per channel")]
    SearchTooLarge(u128),
    #[error("no channel set with the requested minimum gap after {0} attempts")]
    GenerationTimeout(usize),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("io: {0}")]
    Io(String),
    /// An experiment setting is invalid; `key` names the offending option.
    #[error("invalid {key}: {message}")]
    Config { key: String, message: String },
}

impl Error {
    pub(crate) fn config(key: &str, message: impl Into<String>) -> Self {
        Error::Config { key: key.to_string(), message: message.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
