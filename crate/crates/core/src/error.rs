use thiserror::Error;

/// Errors surfaced by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("floor not resolved: enclosure {enclosure} still straddles an integer at {bits} bits")]
    UnresolvedFloor { enclosure: String, bits: u32 },
    #[error("n = {n} is below the asymptotic regime: {reason}")]
    BelowAsymptoticRegime { n: u64, reason: String },
    #[error("polytope is unbounded")]
    Unbounded,
    #[error("input too large: {0}")]
    SizeCap(String),
    #[error("value does not fit the output type: {0}")]
    Overflow(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
