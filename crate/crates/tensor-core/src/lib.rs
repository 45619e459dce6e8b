//! Minimal dense neural-network substrate: tensors, reverse-mode
//! differentiation on a per-loss tape, MLPs, Adam, and target-network
//! management. Everything is f64 and deterministic given a seed.

mod error;
mod kernels;
mod mlp;
mod optim;
mod params;
mod tape;
mod tensor;

pub mod ops;
pub mod rng;

pub use error::{Result, TensorError};
pub use mlp::{init_mlp_params, mlp_forward, mlp_forward_value, Activation, MlpSpec};
pub use optim::{adam_step, target_update, AdamState};
pub use params::{BoundParams, ParamSet};
pub use tape::{Gradients, Tape, TapeTensor};
pub use tensor::Tensor;
