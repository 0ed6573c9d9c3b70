use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    #[error("L_R = {l_r} is not divisible by K = {k}")]
    NotDivisible { l_r: usize, k: usize },

    #[error("{what} = {value} does not fit in a 64-bit count")]
    Overflow { what: &'static str, value: String },

    #[error("frequency index {index} out of range 0..{m}")]
    FreqIndex { index: usize, m: usize },

    #[error("invalid codeword: {0}")]
    Codeword(String),

    #[error("rank {rank} out of range for {bits}-bit labels")]
    Rank { rank: u64, bits: u32 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("need at least {need} members, got {got}")]
    TooFewMembers { need: usize, got: usize },

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("target BER {target:e} is not bracketed by curve `{curve}`")]
    NoBracket { curve: String, target: f64 },

    #[error("empty SNR grid")]
    EmptyGrid,

    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            field,
            reason: reason.into(),
        }
    }
}
