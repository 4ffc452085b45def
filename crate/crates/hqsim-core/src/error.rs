//! Library error type.

use thiserror::Error;

/// Errors produced by the simulation library.
///
/// The variants map onto the CLI exit-code classes: `Invalid` is a
/// configuration/schema problem, `Io` is a filesystem problem, and the
/// remaining variants are numerical/statistical failures.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or parameter value.
    #[error("invalid configuration: {0}")]
    Invalid(String),

    /// A numerical routine failed to converge or lost accuracy.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A requested computation exceeds a configured resource cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Not enough events/samples for the requested statistical analysis.
    #[error("insufficient statistics: {0}")]
    Statistics(String),

    /// Query outside the supported domain (e.g. interpolation hull).
    #[error("out of range: {0}")]
    Range(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable code for this error class.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Invalid(_) => "config_schema",
            Error::Numerical(_) => "numerical",
            Error::Capacity(_) => "capacity",
            Error::Statistics(_) => "statistics",
            Error::Range(_) => "range",
            Error::Io(_) => "io",
        }
    }
}
