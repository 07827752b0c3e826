//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by objectives, the message bus, learners, and the engine.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: unknown ids, out-of-range endpoints, bad parameters.
    #[error("input error: {0}")]
    Input(String),

    /// An instance exceeds a guard that bounds exhaustive or brute-force work.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// A caller violated a call-ordering contract (double broadcast,
    /// double feed, incomplete neighbor set, ...).
    #[error("protocol error: {0}")]
    Protocol(String),

    /// A runtime check of a structural invariant failed (e.g. a reward
    /// above the declared scale).
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// A scenario or topology file could not be parsed.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
