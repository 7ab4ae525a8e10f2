use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension pair (n={n}, k={k}): need 2 <= 2k < n")]
    Dim { n: u32, k: u32 },
    #[error("parameter out of supported range: {0}")]
    Range(String),
    #[error("divergent integral: {0}")]
    Divergent(String),
    #[error("result not representable in the profile algebra: {0}")]
    NonRepresentable(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("operator is not coercive: {0}")]
    NotCoercive(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
