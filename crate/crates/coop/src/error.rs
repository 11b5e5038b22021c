use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("reference set is empty")]
    EmptyReferences,

    #[error("input list is empty")]
    EmptyInput,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected}, got {got}{}", context_suffix(.context))]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: Option<String>,
    },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("convex weights invalid: {0}")]
    InvalidWeights(String),

    #[error("subset selection invalid: {0}")]
    InvalidSubset(String),

    #[error("{n} inputs exceed the exact-search limit of {max}; use greedy or beam search")]
    TooManyForExact { n: usize, max: usize },

    #[error("vector has zero norm; {0}")]
    ZeroVector(String),

    #[error("variance missing or nonpositive for input {index}")]
    BadVariance { index: usize },

    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },

    #[error("duplicate entity id {0:?}")]
    DuplicateEntity(String),

    #[error("entity {entity:?}: {message}")]
    Entity { entity: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn context_suffix(context: &Option<String>) -> String {
    match context {
        Some(c) => format!(" ({c})"),
        None => String::new(),
    }
}
