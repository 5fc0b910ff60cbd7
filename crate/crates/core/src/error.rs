use thiserror::Error;

/// Errors raised by the construction, enumeration and search routines.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A partition violated one of its invariants.
    #[error("invalid partition {parts:?}: {reason}")]
    InvalidPartition { parts: Vec<u32>, reason: String },
    /// A label sequence is not a permutation of `1..=m`.
    #[error("invalid permutation {labels:?}: {reason}")]
    InvalidPermutation { labels: Vec<u32>, reason: String },
    /// Two permutations share a label at some depth.
    #[error("permutations collide at depth {depth} (label {label})")]
    Incompatible { depth: usize, label: u32 },
    /// Operands of different sizes.
    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    /// A brute-force routine refused an instance above its hard limit.
    #[error("guard refused {what}: {value} exceeds limit {limit}")]
    Guard {
        what: &'static str,
        value: usize,
        limit: usize,
    },
    /// Arithmetic exceeded the range of the result type.
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
    /// Malformed textual input (alist, JSON, partition syntax).
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
