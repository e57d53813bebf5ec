use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("enumeration of 2^{log2_size} elements exceeds the cap of {cap}")]
    EnumerationCap { log2_size: usize, cap: u64 },

    #[error("matrix has rank {rank} but {rows} rows; full row rank required")]
    RankDeficient { rank: usize, rows: usize },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("two-factor system requires a key")]
    MissingKey,

    #[error("attack strategy needs side information the view does not grant: {0}")]
    UnavailableSideInformation(&'static str),

    #[error("operation not supported in exact mode: {0}")]
    ExactUnsupported(&'static str),

    #[error("ciphertext is not a unit modulo the public modulus")]
    NotCoprime,

    #[error("claimant failed the decryption check for the announced key")]
    DecryptionFailure,

    #[error("no prime found after {0} candidates")]
    PrimeSearchExhausted(usize),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("protocol error: {0}")]
    Protocol(#[from] crate::smc::wire::ProtocolError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, found })
    }
}
