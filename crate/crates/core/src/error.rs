use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid triple: {0}")]
    InvalidTriple(String),

    #[error("triple {triple} out of range for n = {n}")]
    TripleOutOfRange { triple: String, n: usize },

    #[error("rank {rank} out of range for n = {n} (C(n,3) = {count})")]
    RankOutOfRange { rank: u64, n: usize, count: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "refusing to enumerate n = {n} above cap {cap}: {permutations} permutations, \
         estimated {estimate}; pass force to override"
    )]
    CapExceeded {
        n: usize,
        cap: usize,
        permutations: String,
        estimate: String,
    },

    #[error("infinite-case trial {trial} exceeded hard cap of {hard_cap} positions")]
    HardCapExceeded { trial: u64, hard_cap: u64 },

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("empty estimate set")]
    EmptyEstimates,

    #[error("output error: {0}")]
    Output(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Output(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Output(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Output(e.to_string())
    }
}
