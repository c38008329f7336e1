use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("no stages: n_seq and l_seq must both be non-empty")]
    NoStages,
    #[error("l_seq exhausted: no k with l_k <= {ell} < l_(k+1)")]
    LSeqExhausted { ell: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("eta = {eta} violates eta < 1/(100 d) or (1-eta)^2 > 1/2")]
    EtaOutOfRange { eta: String },
    #[error("stage {n} out of range (truncation {trunc})")]
    StageOutOfRange { n: usize, trunc: usize },
    #[error("level {j} out of range for tower {n} of height {h}")]
    LevelOutOfRange { n: usize, j: u128, h: u128 },
    #[error("height of tower {n} does not fit in 128 bits")]
    HeightOverflow { n: usize },
    #[error("top of truncation reached")]
    TopOfTruncation,
    #[error("out of truncation by {overshoot} (valid shifts {lo}..={hi})")]
    OutOfTruncation { overshoot: i128, lo: i128, hi: i128 },
    #[error("points do not share a truncation")]
    TruncationMismatch,
    #[error("expected {expected} digits, got {got}")]
    DigitCount { expected: usize, got: usize },
    #[error("digit {0} is not in 1..=3")]
    BadDigit(u8),
    #[error("twist spec must split 1..=d into two nonempty groups")]
    BadTwistSpec,
    #[error("zero mass in C_n^d")]
    ZeroMass,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("malformed witness at level {level}: {reason}")]
    MalformedWitness { level: usize, reason: String },
    #[error("no qualifying n found")]
    NotFound,
}

pub type Result<T> = std::result::Result<T, Error>;
