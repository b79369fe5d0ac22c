use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown config key `{key}` ({origin})")]
    UnknownKey { key: String, origin: String },

    #[error("invalid value `{value}` for `{key}` ({origin}): {reason}")]
    InvalidValue {
        key: String,
        value: String,
        origin: String,
        reason: String,
    },

    #[error("{origin}: expected `key = value`, got `{line}`")]
    Syntax { origin: String, line: String },

    #[error("key `{key}` given twice ({origin})")]
    Duplicate { key: String, origin: String },

    #[error("{0}")]
    Config(String),

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] uacqr::Error),
}
