use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mode index {index} out of range for {n_modes} modes")]
    IndexOutOfRange { index: usize, n_modes: usize },

    #[error("input modes must differ, got {0} twice")]
    SameInput(usize),

    #[error("unreachable herald: output {k} has zero detection probability for inputs ({i}, {j})")]
    UnreachableHerald { i: usize, j: usize, k: usize },

    #[error("distribution is identically zero")]
    ZeroDistribution,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid transfer matrix: {0}")]
    InvalidMatrix(String),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("time-tag format error: {0}")]
    Format(String),

    #[error("time tags out of order at record {index}: {time} < {previous}")]
    NonMonotonic {
        index: usize,
        time: u64,
        previous: u64,
    },

    #[error("no side peaks found in correlation histogram: {0}")]
    NoSidePeaks(String),

    #[error("underdetermined dataset: {0}")]
    Underdetermined(String),

    #[error("empty dataset: {0}")]
    EmptyData(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
