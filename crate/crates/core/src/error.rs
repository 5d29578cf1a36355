use thiserror::Error;

use crate::funclang::{EvalError, ParseError};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("gamma pole at {0}")]
    Pole(f64),
    #[error("overflow evaluating gamma at {0}")]
    Overflow(f64),
    #[error("cancellation: rounding error {roundoff:e} swamps the sum {value:e} after {terms} terms")]
    Cancellation { terms: usize, roundoff: f64, value: f64 },
    #[error("series sum overflows after {terms} terms")]
    SeriesOverflow { terms: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{what}: tolerance not met within {terms} terms")]
    Tolerance { what: String, terms: usize },
    #[error("{what}: terms failed to decay (stopped at term {terms})")]
    Divergence { what: String, terms: usize },
    #[error("kernel argument {arg} outside radius of convergence {radius}")]
    Radius { arg: f64, radius: f64 },
    #[error("quadrature failed: error estimate {estimate:.3e} above tolerance {tolerance:.3e} after {subdivisions} subdivisions")]
    QuadFailure {
        estimate: f64,
        tolerance: f64,
        subdivisions: usize,
    },
    #[error("invalid {name}: {message}")]
    InvalidParameter { name: String, message: String },
    #[error("hypothesis violated at theta = {theta}: {quantity}")]
    HypothesisViolation { theta: f64, quantity: String },
    #[error("phi = {phi} must lie in (0, tau1 = {tau1})")]
    PhiRange { phi: f64, tau1: f64 },
    #[error("box bound violated at theta = {theta}: {quantity}")]
    BoxViolation { theta: f64, quantity: String },
    #[error("theorem {theorem} needs {missing}")]
    MissingHypothesis { theorem: String, missing: String },
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("evaluation error: {0}")]
    Eval(#[from] EvalError),
    #[error("scenario file: {0}")]
    ScenarioParse(String),
    #[error("scenario constraints violated: {}", .0.join("; "))]
    Constraint(Vec<String>),
    #[error("{0} is out of range")]
    Range(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            message: message.into(),
        }
    }

    /// Whether this error comes from malformed input rather than from a
    /// numerical method giving up.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::HypothesisViolation { .. }
                | Error::PhiRange { .. }
                | Error::BoxViolation { .. }
                | Error::MissingHypothesis { .. }
                | Error::Parse(_)
                | Error::ScenarioParse(_)
                | Error::Constraint(_)
                | Error::Range(_)
                | Error::Io(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
