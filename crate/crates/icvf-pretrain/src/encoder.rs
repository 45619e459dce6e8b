//! The shared observation encoder: feature extraction, a dense backbone, and
//! head shapes. Downstream Q/policy networks initialize from this encoder.

use rand::Rng;
use serde::{Deserialize, Serialize};
use tensor_core::{
    init_mlp_params, mlp_forward, mlp_forward_value, ops, Activation, BoundParams, MlpSpec,
    ParamSet, Tape, TapeTensor, Tensor,
};
use worlds::{Geometry, GridWorld, Observation};

use crate::error::{IcvfError, Result};

/// How observations become feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// Flattened one-hot occupancy tensor.
    Grid { dim: usize },
    /// One-hot index of the agent's cell in the free-cell enumeration.
    /// Paired with linear heads this removes all function-approximation
    /// error, enabling exact oracle comparison.
    Tabular { geometry: Geometry },
}

impl FeatureMode {
    pub fn dim(&self) -> usize {
        match self {
            FeatureMode::Grid { dim } => *dim,
            FeatureMode::Tabular { geometry } => geometry.free_cells().len(),
        }
    }

    pub fn extract(&self, obs: &Observation) -> Result<Vec<f64>> {
        match self {
            FeatureMode::Grid { dim } => {
                let f = obs.grid_features();
                if f.len() != *dim {
                    return Err(IcvfError::InvalidConfig(format!(
                        "observation has {} grid features, encoder expects {dim}",
                        f.len()
                    )));
                }
                Ok(f)
            }
            FeatureMode::Tabular { geometry } => {
                let n = geometry.free_cells().len();
                let idx = GridWorld::state_index_of(geometry, obs)?;
                let mut f = vec![0.0; n];
                f[idx] = 1.0;
                Ok(f)
            }
        }
    }

    /// Stack features for a batch of observations into a [B, dim] tensor.
    pub fn batch(&self, observations: &[&Observation]) -> Result<Tensor> {
        let dim = self.dim();
        let mut data = Vec::with_capacity(observations.len() * dim);
        for obs in observations {
            data.extend(self.extract(obs)?);
        }
        Ok(Tensor::new(vec![observations.len(), dim], data)?)
    }
}

/// Encoder shapes: features -> backbone -> d-dim embedding, plus the shared
/// head shape (embedding -> k-dim) used by every value/policy head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderArch {
    pub features: FeatureMode,
    /// Identity backbone: features pass straight to the heads (tabular mode).
    pub identity_backbone: bool,
    pub backbone_hidden: Vec<usize>,
    pub embed_dim: usize,
    pub head_hidden: Vec<usize>,
    pub head_dim: usize,
    pub activation: Activation,
    pub layer_norm: bool,
}

impl EncoderArch {
    /// Desk-scale dense encoder on grid features.
    pub fn grid(obs_dim: usize) -> Self {
        EncoderArch {
            features: FeatureMode::Grid { dim: obs_dim },
            identity_backbone: false,
            backbone_hidden: vec![64],
            embed_dim: 64,
            head_hidden: vec![64],
            head_dim: 64,
            activation: Activation::Relu,
            layer_norm: false,
        }
    }

    /// One-hot state features with purely linear heads.
    pub fn tabular(geometry: Geometry, head_dim: usize) -> Self {
        let n = geometry.free_cells().len();
        EncoderArch {
            features: FeatureMode::Tabular { geometry },
            identity_backbone: true,
            backbone_hidden: vec![],
            embed_dim: n,
            head_hidden: vec![],
            head_dim,
            activation: Activation::Relu,
            layer_norm: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.head_dim == 0 {
            return Err(IcvfError::InvalidConfig("zero encoder dims".into()));
        }
        if self.identity_backbone {
            if self.embed_dim != self.features.dim() {
                return Err(IcvfError::InvalidConfig(
                    "identity backbone requires embed_dim == feature dim".into(),
                ));
            }
            if !self.backbone_hidden.is_empty() {
                return Err(IcvfError::InvalidConfig(
                    "identity backbone cannot have hidden layers".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn backbone_spec(&self) -> Option<MlpSpec> {
        if self.identity_backbone {
            None
        } else {
            let mut spec = MlpSpec::new(
                self.features.dim(),
                self.backbone_hidden.clone(),
                self.embed_dim,
            );
            spec.activation = self.activation;
            Some(spec)
        }
    }

    pub fn head_spec(&self) -> MlpSpec {
        let mut spec = MlpSpec::new(self.embed_dim, self.head_hidden.clone(), self.head_dim);
        spec.activation = self.activation;
        spec
    }

    /// Initialize backbone parameters under `prefix` (empty for identity).
    pub fn init_backbone(&self, prefix: &str, rng: &mut impl Rng) -> Result<ParamSet> {
        match self.backbone_spec() {
            None => Ok(ParamSet::new()),
            Some(spec) => Ok(init_mlp_params(&spec, prefix, rng)?),
        }
    }

    pub fn init_head(&self, prefix: &str, rng: &mut impl Rng) -> Result<ParamSet> {
        Ok(init_mlp_params(&self.head_spec(), prefix, rng)?)
    }

    /// Backbone forward on the tape. With layer norm enabled, each hidden
    /// activation is normalized per row before the next layer.
    pub fn backbone_forward(
        &self,
        tape: &Tape,
        bound: &BoundParams,
        prefix: &str,
        x: TapeTensor,
    ) -> Result<TapeTensor> {
        let Some(spec) = self.backbone_spec() else {
            return Ok(x);
        };
        if !self.layer_norm {
            return Ok(mlp_forward(tape, &spec, bound, prefix, x)?);
        }
        let mut h = x;
        let n_layers = spec.layer_count();
        for i in 0..n_layers {
            let w = bound.get(&format!("{prefix}w{i}"))?;
            let b = bound.get(&format!("{prefix}b{i}"))?;
            h = tape.add_row(tape.matmul(h, w)?, b)?;
            if i + 1 < n_layers {
                h = match self.activation {
                    Activation::Relu => tape.relu(h)?,
                    Activation::Tanh => tape.tanh(h)?,
                };
                h = tape.layer_norm_row(h)?;
            }
        }
        Ok(h)
    }

    /// Tape-free backbone forward; bit-identical to the tape path.
    pub fn backbone_forward_value(
        &self,
        params: &ParamSet,
        prefix: &str,
        x: &Tensor,
    ) -> Result<Tensor> {
        let Some(spec) = self.backbone_spec() else {
            return Ok(x.clone());
        };
        if !self.layer_norm {
            return Ok(mlp_forward_value(&spec, params, prefix, x)?);
        }
        let mut h = x.clone();
        let n_layers = spec.layer_count();
        for i in 0..n_layers {
            let w = params.get(&format!("{prefix}w{i}"))?;
            let b = params.get(&format!("{prefix}b{i}"))?;
            h = ops::add_row(&ops::matmul(&h, w)?, b)?;
            if i + 1 < n_layers {
                h = match self.activation {
                    Activation::Relu => ops::relu(&h),
                    Activation::Tanh => ops::tanh(&h),
                };
                h = ops::layer_norm_row(&h);
            }
        }
        Ok(h)
    }
}
