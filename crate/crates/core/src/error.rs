use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("fiber is empty at the supplied short-term law")]
    FiberEmpty,

    #[error("identified set is empty: {0}")]
    Infeasible(String),

    #[error("lattice at resolution {resolution} admits no feasible short-term law; raise the resolution")]
    Resolution { resolution: usize },

    #[error("oracle refused: {0}")]
    OracleLimit(String),

    #[error("empty set")]
    EmptySet,

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
