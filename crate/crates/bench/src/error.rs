use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Config(#[from] aggspec_core::Error),
    #[error("scenario `{scenario}`, cell {cell}: {source}")]
    Cell {
        scenario: String,
        cell: String,
        source: aggspec_core::Error,
    },
    #[error("refusing to write an empty result table")]
    EmptyTable,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl BenchError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| BenchError::Io { path, source }
    }
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
