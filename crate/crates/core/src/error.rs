use thiserror::Error;

/// Errors raised anywhere in the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The photon-number cutoff cannot hold the requested state.
    #[error("truncation error: {0}")]
    Truncation(String),

    #[error("index error: {0}")]
    Index(String),

    /// An operation was pointed at the wrong kind of subsystem.
    #[error("type error: {0}")]
    Type(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A parameter lies outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// The state does not have the subsystem layout an operation expects.
    #[error("layout mismatch: {0}")]
    Layout(String),

    #[error("empty parity table")]
    EmptyTable,

    #[error("sweep grid has no points")]
    EmptyGrid,

    #[error("statistics do not come from a beam-splitting attack run")]
    NotAttackRun,

    #[error("phase-slice count d = {0} is odd; sifting needs an even d")]
    OddD(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
