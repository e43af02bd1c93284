use std::fmt;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    InvalidInput(String),
    /// A subspace image or spanning set collapsed below the requested dimension.
    DegenerateSubspace(String),
    /// A configured budget (word visits, wedge size, burn-in length) was exceeded.
    ResourceLimit(String),
    /// The operation is only defined for a structured family the input is not in.
    Unsupported(String),
    /// An internal consistency check failed; the result would be meaningless.
    Inconsistent(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::DegenerateSubspace(msg) => write!(f, "degenerate subspace: {msg}"),
            Error::ResourceLimit(msg) => write!(f, "resource limit: {msg}"),
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
            Error::Inconsistent(msg) => write!(f, "internal inconsistency: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
