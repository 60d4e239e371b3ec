//! Error types for graph storage and query evaluation.

use thiserror::Error;

/// Errors raised by graph mutation, persistence and subgraph extraction.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("edge endpoint {0} does not exist")]
    DanglingEndpoint(crate::model::NodeId),

    #[error("no Person node named '{0}'")]
    PersonNotFound(String),

    #[error("format error at line {line}: {message}")]
    FormatError { line: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Errors raised while parsing or evaluating a query.
#[derive(Debug, Error, PartialEq)]
pub enum QueryError {
    #[error("syntax error at position {position}: expected {expected}, found {found}")]
    SyntaxError {
        /// Character offset into the query text.
        position: usize,
        expected: String,
        found: String,
    },

    #[error("variable '{0}' is not bound in MATCH")]
    UnboundVariable(String),

    #[error("relationship variable '{0}' is bound more than once")]
    DuplicateRelVariable(String),

    #[error("ORDER BY item '{0}' does not appear in RETURN")]
    OrderByNotProjected(String),

    #[error("type mismatch: cannot compare {lhs} to {rhs}")]
    TypeMismatch { lhs: String, rhs: String },
}
