use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("grid alignment error: {0}")]
    Alignment(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("graph state error: {0}")]
    State(String),

    #[error("numerical abort: {0}")]
    Numerical(String),

    #[error("missing artifact {path}: run `parkcast {command}` first")]
    Prerequisite { path: PathBuf, command: &'static str },
}

impl Error {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parameter(_) => 2,
            Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_)
            | Error::Schema(_)
            | Error::Alignment(_)
            | Error::Split(_)
            | Error::Data(_) => 3,
            Error::Numerical(_) | Error::State(_) => 4,
            Error::Prerequisite { .. } => 5,
        }
    }
}
