use thiserror::Error;

/// Errors raised by the key-capacity computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("computation did not converge: {0}")]
    NonConvergence(String),

    #[error("estimation impossible: {0}")]
    EstimationImpossible(String),

    #[error("chernoff bound not applicable: {0}")]
    ChernoffInapplicable(crate::finite::ChernoffDiagnostics),

    #[error("computation error: {0}")]
    Computation(String),

    #[error("no key: {0}")]
    NoKey(String),

    #[error("security table: {0}")]
    Table(String),

    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid value for `{key}`: {msg}")]
    Invalid { key: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
