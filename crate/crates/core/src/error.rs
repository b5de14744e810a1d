use thiserror::Error;

/// Failure classes shared by every operation in the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("{op}: domain error: {msg}")]
    Domain { op: &'static str, msg: String },
    /// The argument is valid but outside the range this implementation covers.
    #[error("{op}: range error: {msg}")]
    Range { op: &'static str, msg: String },
    /// A complex scale or argument would cross a branch cut.
    #[error("{op}: branch cut: {msg}")]
    Branch { op: &'static str, msg: String },
    /// Quadrature or internal consistency checks did not meet their tolerance.
    #[error("{op}: numeric failure: {msg}")]
    Numeric { op: &'static str, msg: String },
    /// A caller-side precondition was violated.
    #[error("{op}: contract violation: {msg}")]
    Contract { op: &'static str, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Error {
    Error::Domain { op, msg: msg.into() }
}

pub(crate) fn range(op: &'static str, msg: impl Into<String>) -> Error {
    Error::Range { op, msg: msg.into() }
}

pub(crate) fn branch(op: &'static str, msg: impl Into<String>) -> Error {
    Error::Branch { op, msg: msg.into() }
}

pub(crate) fn numeric(op: &'static str, msg: impl Into<String>) -> Error {
    Error::Numeric { op, msg: msg.into() }
}

pub(crate) fn contract(op: &'static str, msg: impl Into<String>) -> Error {
    Error::Contract { op, msg: msg.into() }
}
