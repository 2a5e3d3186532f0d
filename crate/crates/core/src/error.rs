use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("not a valid density matrix: {0}")]
    InvalidState(String),

    #[error("matrix is not unitary (max |UU\u{2020} - I| = {0:e})")]
    NotUnitary(f64),

    #[error(
        "inverse temperature {0} is not allowed: only full-rank states can be prepared \
         with finite thermodynamic resources"
    )]
    ThirdLaw(f64),

    #[error("{letters} letters cannot split a {dim}-dimensional space into equal blocks")]
    Indivisible { dim: usize, letters: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
