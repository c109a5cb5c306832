use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid belief: {0}")]
    Belief(String),
    #[error("invalid lattice: {0}")]
    Lattice(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("point outside domain: {0}")]
    OutOfDomain(String),
    #[error("invalid game specification: {0}")]
    Spec(String),
    #[error("hull input error: {0}")]
    Hull(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("strategy error: {0}")]
    Strategy(String),
    /// A numeric safety check refused to continue.
    #[error("numeric guard: {0}")]
    Guard(String),
    #[error("oracle error: {0}")]
    Oracle(String),
}

pub type Result<T> = std::result::Result<T, Error>;
