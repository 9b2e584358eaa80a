use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BanditError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A quadratic form that should be non-negative came out below tolerance;
    /// the inverse precision matrix has drifted and needs a refresh.
    #[error("numerical degradation: quadratic form {value:e} below tolerance")]
    NumericalDegradation { value: f64 },

    #[error("construction failed after {attempts} attempts (tightest coherence reached {tightest:.6})")]
    ConstructionFailure { attempts: usize, tightest: f64 },

    #[error("minimal sub-optimality gap undefined: all arms tie")]
    GapUndefined,

    #[error("no class-{label} rows left after filtering with zeta = {zeta}")]
    EmptyClass { label: u8, zeta: f64 },

    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    #[error("invalid policy/environment combination: {0}")]
    InvalidCombination(String),

    #[error("no level below {cap} satisfies the l_delta predicate")]
    NoSolution { cap: u32 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, BanditError>;

pub(crate) fn invalid(msg: impl Into<String>) -> BanditError {
    BanditError::InvalidArgument(msg.into())
}
