//! Engine-wide error type.

use thiserror::Error;

/// Errors surfaced by the engine's public operations.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("sort error at {line}:{col}: {msg}")]
    Sort { line: usize, col: usize, msg: String },
    #[error("unbound variable `{name}` at {line}:{col}")]
    Unbound { name: String, line: usize, col: usize },
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("insufficient input depth: {0}")]
    Depth(String),
    #[error("shape preorder violation: {0}")]
    Preorder(String),
    #[error("illegal color in use: {0}")]
    IllegalColor(String),
    #[error("unsatisfiable coarse type: {0}")]
    Unsatisfiable(String),
    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, EngineError>;
