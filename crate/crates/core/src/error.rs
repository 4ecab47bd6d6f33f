use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    /// Structurally invalid input (bad labels, malformed orders, shape
    /// mismatches, schema violations). Carries a path-like description.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// An enumeration or materialization cap was exceeded.
    #[error("size cap exceeded: {0}")]
    Cap(String),

    /// The input is well-formed but outside the operation's domain
    /// (wrong preference kind, wrong pinned instance, failed precondition).
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
