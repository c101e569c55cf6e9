use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("weight {name} is not {expected} (smallest eigenvalue {min_eigenvalue:e})")]
    IndefiniteWeight {
        name: &'static str,
        expected: &'static str,
        min_eigenvalue: f64,
    },

    #[error("stage {stage}: coupled gain system is singular (reciprocal condition {rcond:e})")]
    SingularStageSystem { stage: usize, rcond: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("sweep cell (rho={rho}, sigma0={sigma0}): {source}")]
    Cell {
        rho: f64,
        sigma0: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
