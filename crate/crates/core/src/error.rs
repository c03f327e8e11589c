//! Crate-wide error type.

use crate::label::Label;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Domain/codomain of an operation's arguments do not line up.
    #[error("boundary mismatch in {op}: {detail}")]
    Boundary { op: &'static str, detail: String },

    #[error("duplicate label {0} in finite set")]
    DuplicateLabel(Label),

    #[error("label {label} not an element of {set}")]
    UnknownLabel { set: String, label: Label },

    /// A structure map was asked to produce a value beyond the carrier bound.
    #[error("{op} output out of bound for input {input}")]
    OutOfBound { op: &'static str, input: String },

    /// An element label does not decode as the expected shape.
    #[error("malformed element for {op}: expected {expected}, got {got}")]
    Malformed {
        op: &'static str,
        expected: &'static str,
        got: Label,
    },

    #[error("square is not cartesian: {detail}")]
    NotCartesian { detail: String },

    #[error("algebra has no equality structure")]
    MissingEq,

    #[error("map is not an equivalence; witness {witness}")]
    NotEquivalence { witness: Label },

    #[error("classifier mismatch: {0}")]
    ClassifierMismatch(String),

    #[error("model is not representable at {at}: {detail}")]
    NotRepresentable { at: Label, detail: String },

    #[error("invalid index category: {0}")]
    Category(String),

    #[error("invalid presheaf data: {0}")]
    Presheaf(String),

    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("unbound variable {0}")]
    Unbound(String),

    #[error("type mismatch: {0}")]
    TypeMismatch(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub fn boundary(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Boundary {
            op,
            detail: detail.into(),
        }
    }
}
