use thiserror::Error;

/// Errors raised by the model checks and the solvers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A structural invariant of an instance or assignment is violated.
    #[error("model error: {0}")]
    Model(String),
    /// The algorithm does not apply to this instance (wrong t, missing utilities, ...).
    #[error("not applicable: {0}")]
    Inapplicable(String),
    /// An operation was called with arguments that break its precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A configured budget (size, iterations, time) was exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    /// Checked integer arithmetic overflowed.
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
    /// Invalid generator or CLI parameters.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// Malformed instance or assignment text.
    #[error("parse error: {0}")]
    Parse(String),
    /// Reading or writing a file failed.
    #[error("i/o error: {0}")]
    Io(String),
    /// A solver produced something its own contract rules out.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn inapplicable(msg: impl Into<String>) -> Error {
    Error::Inapplicable(msg.into())
}

pub(crate) fn resource(msg: impl Into<String>) -> Error {
    Error::Resource(msg.into())
}
