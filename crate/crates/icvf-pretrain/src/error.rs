use thiserror::Error;

#[derive(Debug, Error)]
pub enum IcvfError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("dataset has no usable trajectories (need length >= 2)")]
    EmptyDataset,

    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: u64 },

    #[error("state space too large for the tabular oracle: {states} states")]
    StateSpaceTooLarge { states: usize },

    #[error("checkpoint mismatch: {0}")]
    CheckpointMismatch(String),

    #[error(transparent)]
    Tensor(#[from] tensor_core::TensorError),

    #[error(transparent)]
    World(#[from] worlds::WorldError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, IcvfError>;
