use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("conditioning error: {0}")]
    Conditioning(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("construction failure: {0}")]
    Construction(String),
    #[error("verification failure: {0}")]
    Verification(String),
    #[error("estimation error: {0}")]
    Estimation(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
