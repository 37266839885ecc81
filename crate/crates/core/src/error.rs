use alloc::string::String;
use core::fmt;

/// Error type shared by all modules.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the mathematical domain of the operation.
    Domain(String),
    /// Iteration or quadrature failed to reach the requested accuracy.
    Numerical(String),
    /// Evaluation outside the covered range (e.g. extrapolating a trajectory).
    Range(String),
    /// A positivity or ordering invariant broke during marching.
    Integrity(String),
    /// Bracket scan found no sign change for the shooting parameter.
    Search(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Numerical(m) => write!(f, "numerical error: {m}"),
            Error::Range(m) => write!(f, "range error: {m}"),
            Error::Integrity(m) => write!(f, "integrity error: {m}"),
            Error::Search(m) => write!(f, "search failure: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

impl Error {
    pub fn domain(m: impl Into<String>) -> Self {
        Error::Domain(m.into())
    }
    pub fn numerical(m: impl Into<String>) -> Self {
        Error::Numerical(m.into())
    }
}
