use core::fmt;

use alloc::string::String;

use crate::power_control::PowerCoefficients;

/// Errors raised by the model core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A configuration value violates an invariant.
    InvalidConfig(String),
    /// An argument is outside the operation's domain.
    InvalidArgument(&'static str),
    /// Two operands disagree in shape.
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    /// An operation that needs samples got none.
    Empty,
    /// The max-min power-control search did not converge. Carries the best
    /// feasible coefficients found so far and their minimum SINR.
    SolverFailed {
        reason: String,
        best: PowerCoefficients,
        best_min_sinr: f64,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::DimensionMismatch { expected, found } => write!(
                f,
                "dimension mismatch: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Error::Empty => f.write_str("no samples"),
            Error::SolverFailed {
                reason,
                best_min_sinr,
                ..
            } => write!(
                f,
                "max-min power control failed ({reason}); best feasible min-SINR {best_min_sinr:.6e}"
            ),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
