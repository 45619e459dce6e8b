//! Checkpoint = bit-exact parameter file + JSON sidecar with the encoder
//! shape and training configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tensor_core::ParamSet;

use crate::config::IcvfConfig;
use crate::encoder::EncoderArch;
use crate::error::{IcvfError, Result};
use crate::model::IcvfModel;

pub const ICVF_CHECKPOINT_KIND: &str = "icvf-checkpoint";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IcvfSidecar {
    pub kind: String,
    pub arch: EncoderArch,
    pub config: IcvfConfig,
    pub seed: u64,
}

pub fn save_checkpoint(
    params_path: impl AsRef<Path>,
    sidecar_path: impl AsRef<Path>,
    model: &IcvfModel,
    config: &IcvfConfig,
    seed: u64,
) -> Result<()> {
    model.params.save_to_path(params_path)?;
    let sidecar = IcvfSidecar {
        kind: ICVF_CHECKPOINT_KIND.to_string(),
        arch: model.arch.clone(),
        config: config.clone(),
        seed,
    };
    let json = serde_json::to_string_pretty(&sidecar)?;
    std::fs::write(sidecar_path, json)?;
    Ok(())
}

pub fn load_checkpoint(
    params_path: impl AsRef<Path>,
    sidecar_path: impl AsRef<Path>,
) -> Result<(IcvfModel, IcvfSidecar)> {
    let sidecar: IcvfSidecar =
        serde_json::from_str(&std::fs::read_to_string(sidecar_path)?)?;
    if sidecar.kind != ICVF_CHECKPOINT_KIND {
        return Err(IcvfError::CheckpointMismatch(format!(
            "expected {ICVF_CHECKPOINT_KIND}, found {}",
            sidecar.kind
        )));
    }
    let params = ParamSet::load_from_path(params_path)?;
    let fresh = IcvfModel::init(sidecar.arch.clone(), sidecar.seed)?;
    if !fresh.params.same_layout(&params) {
        return Err(IcvfError::CheckpointMismatch(
            "parameter layout does not match the sidecar architecture".into(),
        ));
    }
    let target = params.clone();
    Ok((
        IcvfModel {
            arch: sidecar.arch.clone(),
            params,
            target,
        },
        sidecar,
    ))
}
