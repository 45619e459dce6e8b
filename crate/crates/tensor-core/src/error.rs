use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape mismatch in {context}: expected {expected:?}, got {found:?}")]
    ShapeMismatch {
        context: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },

    #[error("node {id} does not belong to this tape")]
    DetachedGraph { id: usize },

    #[error("parameter layout mismatch: {context}")]
    LayoutMismatch { context: String },

    #[error("axis {axis} is empty or out of range for shape {shape:?}")]
    InvalidAxis { axis: usize, shape: Vec<usize> },

    #[error("duplicate parameter name {name:?}")]
    DuplicateParam { name: String },

    #[error("unknown parameter {name:?}")]
    UnknownParam { name: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed parameter file: {0}")]
    MalformedFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TensorError>;
