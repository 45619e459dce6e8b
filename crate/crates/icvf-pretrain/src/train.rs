//! The phase-1 training loop: goal/intent sampling, expectile TD updates,
//! periodic target refreshes, and metrics.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use tensor_core::rng::seeded_rng;
use tensor_core::{adam_step, target_update, AdamState};
use worlds::Trajectory;

use crate::config::IcvfConfig;
use crate::encoder::{EncoderArch, FeatureMode};
use crate::error::{IcvfError, Result};
use crate::loss::{assemble_batch, icvf_td_loss};
use crate::model::IcvfModel;
use crate::oracle::{tabular_icvf_oracle, OracleTable};
use crate::sampler::sample_goal_intent;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub step: u64,
    pub td_loss: f64,
    pub mean_advantage: f64,
    /// Sup-norm gap to the exact tabular oracle; tabular feature mode only.
    pub oracle_gap: Option<f64>,
}

pub struct TrainOutput {
    pub model: IcvfModel,
    pub metrics: Vec<MetricsRow>,
}

/// All transition starts (trajectory, index) usable as `s`.
fn transition_starts(dataset: &[Trajectory]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (ti, t) in dataset.iter().enumerate() {
        for oi in 0..t.len().saturating_sub(1) {
            out.push((ti, oi));
        }
    }
    out
}

pub fn train_icvf(
    dataset: &[Trajectory],
    arch: EncoderArch,
    config: &IcvfConfig,
    seed: u64,
) -> Result<TrainOutput> {
    config.validate()?;
    arch.validate()?;
    if dataset.is_empty() {
        return Err(IcvfError::EmptyDataset);
    }
    let starts = transition_starts(dataset);
    if starts.is_empty() {
        return Err(IcvfError::EmptyDataset);
    }

    let oracle: Option<OracleTable> = match &arch.features {
        FeatureMode::Tabular { geometry } => Some(tabular_icvf_oracle(
            geometry,
            config.gamma,
            config.terminate_at_goal,
        )?),
        FeatureMode::Grid { .. } => None,
    };

    let mut model = IcvfModel::init(arch, seed)?;
    let mut adam = AdamState::new(&model.params);
    let mut metrics = Vec::new();

    for step in 0..config.steps {
        let mut rng = seeded_rng(seed, "icvf-batch", step as u64);
        let mut items = Vec::with_capacity(config.batch_size);
        for _ in 0..config.batch_size {
            let start = starts[rng.gen_range(0..starts.len())];
            let (goal, intent) = sample_goal_intent(
                dataset,
                start.0,
                start.1,
                &config.sampler,
                config.gamma,
                &mut rng,
            )?;
            items.push((start, goal, intent));
        }
        let batch = assemble_batch(dataset, &model.arch.features, &items)?;

        let tape = tensor_core::Tape::new();
        let bound = model.params.bind(&tape);
        let (loss, stats) = icvf_td_loss(&tape, &model, &bound, &batch, config)?;
        if !stats.td_loss.is_finite() {
            return Err(IcvfError::NonFiniteLoss { step: step as u64 });
        }
        let grads = tape.backward(loss)?;
        let aligned = bound.gradients(&grads, &model.params)?;
        adam_step(&mut model.params, &aligned, &mut adam, config.lr_at(step))?;
        if (step + 1) % config.target_update_every == 0 {
            target_update(&mut model.target, &model.params, config.target_update_rate)?;
        }

        if (step + 1) % config.metrics_every == 0 || step + 1 == config.steps {
            let oracle_gap = match &oracle {
                Some(table) => Some(table.sup_gap(&model.value_table()?)),
                None => None,
            };
            metrics.push(MetricsRow {
                step: (step + 1) as u64,
                td_loss: stats.td_loss,
                mean_advantage: stats.mean_advantage,
                oracle_gap,
            });
        }
    }
    Ok(TrainOutput { model, metrics })
}

pub fn write_metrics_csv(path: impl AsRef<Path>, rows: &[MetricsRow]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "step,td_loss,mean_advantage,oracle_gap")?;
    for r in rows {
        let gap = r.oracle_gap.map_or(String::new(), |g| format!("{g}"));
        writeln!(w, "{},{},{},{}", r.step, r.td_loss, r.mean_advantage, gap)?;
    }
    w.flush()?;
    Ok(())
}
