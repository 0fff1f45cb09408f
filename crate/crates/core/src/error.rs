use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("{0} is not integral at the chosen prime")]
    NotIntegral(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("sublattice is not contained in the ambient lattice")]
    NotContained,
    #[error("quotient is not torsion: ranks {big} and {small} differ")]
    RankMismatch { big: usize, small: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("hypothesis not met: {0}")]
    Hypothesis(String),
    /// A computed identity that should hold by one of the congruence lemmas
    /// failed; the message names the lemma.
    #[error("lemma assertion failed: {0}")]
    Lemma(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit status: 1 for failed mathematics, 2 for malformed
    /// input, 3 for inputs that parse but fail validation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Lemma(_) => 1,
            Error::Parse(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotPrime(_) => "not-prime",
            Error::NotIntegral(_) => "not-integral",
            Error::Dimension(_) => "dimension",
            Error::NotContained => "not-contained",
            Error::RankMismatch { .. } => "rank-mismatch",
            Error::Parse(_) => "parse",
            Error::Validation(_) => "validation",
            Error::Unsupported(_) => "unsupported",
            Error::Hypothesis(_) => "hypothesis",
            Error::Lemma(_) => "lemma",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
