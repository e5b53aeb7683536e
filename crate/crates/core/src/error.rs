use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch { expected: (usize, usize), got: (usize, usize) },

    #[error("input must be non-empty")]
    Empty,

    #[error("cannot normalize a zero quaternion (entry {index})")]
    ZeroNorm { index: usize },

    #[error("node {node} is not on the tape")]
    UnknownNode { node: usize },

    #[error("backward needs a scalar loss, got a {rows}x{cols} node")]
    NonScalarLoss { rows: usize, cols: usize },

    #[error("non-finite gradient in parameter `{param}` at index {index}")]
    NonFiniteGradient { param: String, index: usize },

    #[error("non-finite score for triple {index} in batch")]
    NonFiniteScore { index: usize },

    #[error("line {line}: expected 3 tab-separated fields, found {found}")]
    MalformedLine { line: usize, found: usize },

    #[error("unknown {kind} label `{label}`")]
    UnknownLabel { kind: &'static str, label: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("candidate set is empty")]
    EmptyCandidates,

    #[error("gold entity {gold} is not among the candidates")]
    GoldNotCandidate { gold: u32 },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
