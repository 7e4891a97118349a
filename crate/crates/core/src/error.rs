//! Error types shared by the toolkit.

use thiserror::Error;

/// Parse failure with the byte offset where it happened.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {expected}, found {found}")]
    Syntax {
        offset: usize,
        expected: String,
        found: String,
    },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("`{name}` takes {expected} argument(s), got {got} (at byte {offset})")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
        offset: usize,
    },
}

/// Evaluation failure: the offending subexpression and the point.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("domain error in `{node}` at t = {t}: {reason}")]
pub struct EvalError {
    pub node: String,
    pub t: f64,
    pub reason: String,
}

/// Umbrella error for every operation in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Geometric operations reject h(t) = t^k with k <= -1 or k = 0: the
    /// chord construction is inconclusive there.
    #[error("h(t) = t^{k} has no conclusive chord geometry (k <= -1 or k = 0); the raw class residual is still available")]
    Caution { k: f64 },
    /// h could not be evaluated at a chord endpoint (argument 0 or 1).
    #[error("h is not evaluable at {at}; sample the chord on a half-open grid that avoids the endpoints")]
    HEndpoint { at: f64 },
    /// A quantity diverges at the requested point (e.g. curve inclination at
    /// an endpoint for s < 1). `sign` carries the sign of the infinity.
    #[error("value diverges to {} at {at}", if *sign >= 0.0 { "+inf" } else { "-inf" })]
    Divergent { at: f64, sign: f64 },
}

impl Error {
    /// Invalid-parameter shorthand.
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParam(msg.into())
    }

    /// Precondition shorthand.
    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
