use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid problem or solver configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A quantity was requested at a point where it is undefined (zero vector, zero operator output).
    #[error("domain error: {0}")]
    Domain(String),

    /// Input does not satisfy the structural requirements of an instance (e.g. a matrix that is not SPD).
    #[error("invalid instance: {0}")]
    Instance(String),

    /// Failure while parsing an initial-guess expression.
    #[error("expression error at column {column}: {message}")]
    Expression { column: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
