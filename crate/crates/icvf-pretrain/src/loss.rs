//! The expectile-weighted TD objective on (s, s', g, z) tuples.
//!
//! Target-side quantities (bootstrap values, advantages, expectile weights)
//! are computed tape-free from the delayed parameter copy; gradients flow
//! only through the online V(s, g, z) term.

use tensor_core::{BoundParams, Tape, TapeTensor, Tensor};
use worlds::Trajectory;

use crate::config::IcvfConfig;
use crate::encoder::FeatureMode;
use crate::error::{IcvfError, Result};
use crate::model::IcvfModel;
use crate::sampler::ObsRef;

/// Feature tensors and rewards for one training batch.
#[derive(Debug, Clone)]
pub struct IcvfBatch {
    pub s: Tensor,
    pub s_next: Tensor,
    pub g: Tensor,
    pub z: Tensor,
    /// I(s = g), exact observation-tensor equality.
    pub reward: Vec<f64>,
}

/// Build feature tensors for sampled (start, goal, intent) references;
/// the successor is the observation after `start`.
pub fn assemble_batch(
    dataset: &[Trajectory],
    features: &FeatureMode,
    items: &[(ObsRef, ObsRef, ObsRef)],
) -> Result<IcvfBatch> {
    let obs = |r: ObsRef| &dataset[r.0].observations[r.1];
    let mut s = Vec::with_capacity(items.len());
    let mut s_next = Vec::with_capacity(items.len());
    let mut g = Vec::with_capacity(items.len());
    let mut z = Vec::with_capacity(items.len());
    let mut reward = Vec::with_capacity(items.len());
    for &(start, goal, intent) in items {
        s.push(obs(start));
        s_next.push(obs((start.0, start.1 + 1)));
        g.push(obs(goal));
        z.push(obs(intent));
        reward.push(if obs(start).same_grid(obs(goal)) {
            1.0
        } else {
            0.0
        });
    }
    Ok(IcvfBatch {
        s: features.batch(&s)?,
        s_next: features.batch(&s_next)?,
        g: features.batch(&g)?,
        z: features.batch(&z)?,
        reward,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct LossStats {
    pub td_loss: f64,
    pub mean_advantage: f64,
}

/// Record the loss on `tape`. Returns the loss node and scalar diagnostics.
pub fn icvf_td_loss(
    tape: &Tape,
    model: &IcvfModel,
    bound: &BoundParams,
    batch: &IcvfBatch,
    config: &IcvfConfig,
) -> Result<(TapeTensor, LossStats)> {
    let b = batch.reward.len();
    if b == 0 {
        return Err(IcvfError::InvalidConfig("empty batch".into()));
    }

    // Bootstrap masks from the goal-reached reward.
    let mask: Vec<f64> = batch
        .reward
        .iter()
        .map(|&r| {
            if config.terminate_at_goal && r == 1.0 {
                0.0
            } else {
                1.0
            }
        })
        .collect();

    // Target-side values, tape-free.
    let v_next_gz = model.values_with(&model.target, &batch.s_next, &batch.g, &batch.z)?;
    let v_s_zz = model.values_with(&model.target, &batch.s, &batch.z, &batch.z)?;
    let v_next_zz = model.values_with(&model.target, &batch.s_next, &batch.z, &batch.z)?;

    let mut targets = vec![0.0; b];
    let mut weights = vec![0.0; b];
    let mut advantage_sum = 0.0;
    for i in 0..b {
        let r = batch.reward[i];
        let m = mask[i];
        let advantage = r + config.gamma * m * v_next_zz.data()[i] - v_s_zz.data()[i];
        advantage_sum += advantage;
        weights[i] = if advantage <= 0.0 {
            1.0 - config.expectile
        } else {
            config.expectile
        };
        targets[i] = r + config.gamma * m * v_next_gz.data()[i];
    }

    let v_online = model.values_tape(tape, bound, &batch.s, &batch.g, &batch.z)?;
    let y = tape.leaf(Tensor::new(vec![b], targets)?);
    let delta = tape.sub(y, v_online)?;
    let sq = tape.mul(delta, delta)?;
    let weighted = tape.mul_const(sq, &Tensor::new(vec![b], weights)?)?;
    let loss = tape.mean_all(weighted)?;

    let stats = LossStats {
        td_loss: tape.value(loss).item()?,
        mean_advantage: advantage_sum / b as f64,
    };
    Ok((loss, stats))
}

/// Loss value without gradients, for tests and diagnostics.
pub fn icvf_td_loss_value(
    model: &IcvfModel,
    batch: &IcvfBatch,
    config: &IcvfConfig,
) -> Result<LossStats> {
    let tape = Tape::new();
    let bound = model.params.bind(&tape);
    let (_, stats) = icvf_td_loss(&tape, model, &bound, batch, config)?;
    Ok(stats)
}
