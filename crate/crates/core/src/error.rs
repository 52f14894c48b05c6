use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid scalar parameter (exponent, step, mesh size, ...).
    Parameter(String),
    /// Vector length does not match the mesh.
    Shape { expected: usize, found: usize },
    /// Input outside the domain of the operation (zero state, negative field, ...).
    Domain(String),
    /// Solver start has no coupling (Ψ vanishes).
    Start(String),
    /// Required state missing (e.g. λ1 not supplied).
    State(String),
    /// Precondition of an algorithm violated.
    Precondition(String),
    /// A discrete path or loop degenerated beyond repair.
    Degenerate(String),
    /// Non-finite value produced during iteration.
    NonFinite(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parameter(m) => write!(f, "parameter error: {m}"),
            Error::Shape { expected, found } => {
                write!(f, "shape error: expected length {expected}, found {found}")
            }
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Start(m) => write!(f, "start error: {m}"),
            Error::State(m) => write!(f, "state error: {m}"),
            Error::Precondition(m) => write!(f, "precondition error: {m}"),
            Error::Degenerate(m) => write!(f, "degenerate configuration: {m}"),
            Error::NonFinite(m) => write!(f, "non-finite value: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Shape { expected, found })
    }
}
