use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unknown symbol `{name}` at byte {offset}")]
    UnknownSymbol { name: String, offset: usize },
    #[error("`{op}` expects {expected} argument(s), found {found} (byte {offset})")]
    ArityMismatch {
        op: String,
        expected: usize,
        found: usize,
        offset: usize,
    },
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("invalid signature: {0}")]
    InvalidSignature(String),
    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),
    #[error("invalid context: {0}")]
    InvalidContext(String),
    #[error("assignment does not cover variable x{0}")]
    MissingAssignment(u32),
    #[error("{what} exceeds the configured cap of {limit}")]
    CapExceeded { what: &'static str, limit: usize },
    #[error("no designated equivalence or subtractive term")]
    NoDesignatedTerm,
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("not unifiable: {0}")]
    NotUnifiable(String),
    #[error("condition (3) fails: {0}")]
    ConditionThreeFailed(String),
    #[error("{0}")]
    Io(String),
}

impl Error {
    pub fn cap(what: &'static str, limit: usize) -> Self {
        Error::CapExceeded { what, limit }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
