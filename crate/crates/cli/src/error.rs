use std::fmt;

use nlhelm::Error;

/// An error carrying its process exit code: 2 parse, 3 invariant,
/// 4 solver, 1 anything else (I/O).
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
    /// Fixed-point increments to report alongside a contraction failure.
    pub history: Option<Vec<f64>>,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            history: None,
        }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Self::new(2, message)
    }

    pub fn invariant(message: impl Into<String>) -> Self {
        Self::new(3, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NoConvergence { .. }
            | Error::NoContraction { .. }
            | Error::DegenerateDenominator { .. }
            | Error::AllDegenerate => 4,
            Error::InvalidParameter(_)
            | Error::Domain { .. }
            | Error::ShapeOutOfBounds { .. }
            | Error::DimensionMismatch { .. }
            | Error::InvariantViolation(_)
            | Error::Aliasing { .. } => 3,
        };
        let history = match &e {
            Error::NoContraction { history, .. } => Some(history.clone()),
            _ => None,
        };
        Self {
            code,
            message: e.to_string(),
            history,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(1, e.to_string())
    }
}
