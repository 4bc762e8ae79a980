use alloc::string::String;

/// Errors raised by the core pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("parameter budget exceeded: {count} parameters > {limit}")]
    BudgetExceeded { count: usize, limit: usize },
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error("category index {0} out of range")]
    CategoryIndex(usize),
    #[error("taxonomy error: {0}")]
    Taxonomy(String),
    #[error("manifest row {row}: {message}")]
    Manifest { row: usize, message: String },
    #[error("dataset has no weed samples")]
    NoWeeds,
    #[error("no crop-labeled samples")]
    NoCrops,
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("objective {objective} requires a {expected}-class head, model has {got}")]
    HeadMismatch {
        objective: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid genotype: {0}")]
    Genotype(String),
    #[error("ragged predictions: model {model} has {got} predictions, expected {expected}")]
    Ragged {
        model: usize,
        expected: usize,
        got: usize,
    },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
