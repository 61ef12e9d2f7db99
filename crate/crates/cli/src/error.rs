use thiserror::Error;

/// Every error here is an input error and maps to exit code 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{path}: line {line}: {message}")]
    Config { path: String, line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    File { path: String, source: lipwalk::Error },
    #[error(transparent)]
    Lib(#[from] lipwalk::Error),
}

pub type CliResult<T> = Result<T, CliError>;
