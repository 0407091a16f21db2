use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("malformed config: {0}")]
    Config(String),

    #[error("invariant order {requested} exceeds the cap {cap}")]
    OrderCap { requested: usize, cap: usize },

    #[error(transparent)]
    Core(#[from] oscitrace::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
