//! Phase 1: intent-conditioned value pre-training on action-free
//! trajectories via an expectile-weighted TD objective, with an exact
//! tabular oracle for verification.

mod checkpoint;
mod config;
mod encoder;
mod error;
mod loss;
mod model;
mod oracle;
mod sampler;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, IcvfSidecar, ICVF_CHECKPOINT_KIND};
pub use config::{GoalSampler, IcvfConfig, LrSchedule};
pub use encoder::{EncoderArch, FeatureMode};
pub use error::{IcvfError, Result};
pub use loss::{assemble_batch, icvf_td_loss, icvf_td_loss_value, IcvfBatch, LossStats};
pub use model::{IcvfModel, BACKBONE_PREFIX, PHI_PREFIX, PSI_PREFIX, T_PREFIX};
pub use oracle::{tabular_icvf_oracle, OracleTable};
pub use sampler::{sample_goal_intent, GoalCategory, ObsRef};
pub use train::{train_icvf, write_metrics_csv, MetricsRow, TrainOutput};
