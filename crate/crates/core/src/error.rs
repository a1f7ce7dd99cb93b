use std::fmt;

use thiserror::Error;

/// A 1-based source position inside a script.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at {at}: {message}")]
    Syntax { at: Location, message: String },

    #[error("unknown identifier `{name}` at {at}")]
    UnknownIdentifier { name: String, at: Location },

    #[error("tuple `{tuple}` used with {found} dimensions at {at}, previously {expected}")]
    ArityMismatch {
        tuple: String,
        expected: usize,
        found: usize,
        at: Location,
    },

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("unsupported operands: {0}")]
    UnsupportedOperands(String),

    #[error("existential `{0}` has no equality with a unit coefficient and cannot be eliminated")]
    NonEliminableExistential(String),

    #[error("map is not invertible as a schedule: input dimension `{0}` is not determined by the output")]
    NotInvertibleAsSchedule(String),

    #[error("set is unbounded in dimension `{0}`")]
    UnboundedSet(String),

    #[error("parameter `{0}` is not bound")]
    UnboundParameter(String),

    #[error("dimension `{0}` has no lower or upper bound in terms of outer dimensions and parameters")]
    UnboundedDimension(String),

    #[error("unsupported union shape: {0}")]
    UnsupportedUnionShape(String),

    #[error("statement `{0}` is not declared or is called with the wrong arity")]
    UnknownStatement(String),

    #[error("{0:?} is not a permutation")]
    NotAPermutation(Vec<usize>),

    #[error("bad tile specification: {0}")]
    BadTileSize(String),

    #[error("unsupported arity: {0}")]
    UnsupportedArity(String),

    #[error("integer overflow in constraint arithmetic")]
    Overflow,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
