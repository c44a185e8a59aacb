use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid process: {0}")]
    InvalidProcess(String),

    #[error("unknown builtin process `{0}` (expected period4, golden_mean, even or rrxor)")]
    UnknownProcess(String),

    #[error("stationary distribution did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("word space too large: {alphabet}^{length} words exceeds the cap of {cap}")]
    WordSpaceTooLarge {
        alphabet: usize,
        length: usize,
        cap: usize,
    },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("support mismatch: {0} vs {1} entries")]
    SupportMismatch(usize, usize),

    #[error("series of length {len} is too short for windows of K + L = {window}")]
    SeriesTooShort { len: usize, window: usize },

    #[error("invalid symbol {symbol} for alphabet of size {alphabet}")]
    InvalidSymbol { symbol: usize, alphabet: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("history {0} has infinite divergence to every state morph")]
    UnassignableHistory(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
