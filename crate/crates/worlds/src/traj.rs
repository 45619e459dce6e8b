//! Trajectories, task vectors, and the JSON-lines interchange format.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WorldError};
use crate::grid::{Domain, Observation};

/// One-hot task identifier. `dim` spans the pre-training tasks plus reserved
/// slots for target tasks, so fine-tuning never reshapes the networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskVector {
    pub index: usize,
    pub dim: usize,
}

impl TaskVector {
    pub fn new(index: usize, dim: usize) -> Result<Self> {
        if index >= dim {
            return Err(WorldError::InvalidConfig(format!(
                "task index {index} outside dimension {dim}"
            )));
        }
        Ok(TaskVector { index, dim })
    }

    pub fn to_one_hot(self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        v[self.index] = 1.0;
        v
    }
}

/// Ordered observations, optionally annotated with actions, rewards, a task
/// and a success flag. Video-domain trajectories carry observations only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub domain: Domain,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub task: Option<TaskVector>,
    pub observations: Vec<Observation>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub actions: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rewards: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub success: Option<bool>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Check the alignment invariants: actions one shorter than observations,
    /// rewards aligned with actions.
    pub fn validate(&self) -> Result<()> {
        if let Some(actions) = &self.actions {
            if actions.len() + 1 != self.observations.len() {
                return Err(WorldError::MalformedDataset(format!(
                    "{} actions for {} observations",
                    actions.len(),
                    self.observations.len()
                )));
            }
        }
        if let Some(rewards) = &self.rewards {
            match &self.actions {
                Some(actions) if actions.len() == rewards.len() => {}
                _ => {
                    return Err(WorldError::MalformedDataset(
                        "rewards not aligned with actions".into(),
                    ))
                }
            }
        }
        Ok(())
    }
}

/// Sparse demo rewards: raw +1 on the last `min(3, length)` steps, 0 before,
/// then `scale * raw + bias` is what gets stored.
pub fn label_rewards(mut demo: Trajectory, scale: f64, bias: f64) -> Result<Trajectory> {
    let Some(actions) = &demo.actions else {
        return Err(WorldError::MissingActions);
    };
    let n = actions.len();
    if n == 0 {
        return Err(WorldError::MissingActions);
    }
    let hot = n.min(3);
    let rewards = (0..n)
        .map(|i| {
            let raw = if i >= n - hot { 1.0 } else { 0.0 };
            scale * raw + bias
        })
        .collect();
    demo.rewards = Some(rewards);
    Ok(demo)
}

pub fn save_jsonl(path: impl AsRef<Path>, trajectories: &[Trajectory]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    for t in trajectories {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Vec<Trajectory>> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t: Trajectory = serde_json::from_str(&line)
            .map_err(|e| WorldError::MalformedDataset(format!("line {}: {e}", i + 1)))?;
        t.validate()?;
        out.push(t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Domain, GridWorld, Geometry};

    fn demo_of_length(n_obs: usize) -> Trajectory {
        let geom = Geometry::open(4, 1, 1).unwrap();
        let w = GridWorld::new(geom, (0, 0), Domain::Robot).unwrap();
        Trajectory {
            domain: Domain::Robot,
            task: Some(TaskVector::new(0, 6).unwrap()),
            observations: (0..n_obs).map(|_| w.observe()).collect(),
            actions: Some(vec![3; n_obs - 1]),
            rewards: None,
            success: Some(true),
        }
    }

    #[test]
    fn reward_labels_match_the_final_three_rule() {
        let demo = label_rewards(demo_of_length(8), 11.0, -1.0).unwrap();
        assert_eq!(
            demo.rewards.unwrap(),
            vec![-1.0, -1.0, -1.0, -1.0, 10.0, 10.0, 10.0]
        );
    }

    #[test]
    fn short_demos_use_min_three_rule() {
        let demo = label_rewards(demo_of_length(3), 11.0, -1.0).unwrap();
        assert_eq!(demo.rewards.unwrap(), vec![10.0, 10.0]);
    }

    #[test]
    fn unscaled_labels_are_zero_one() {
        let demo = label_rewards(demo_of_length(6), 1.0, 0.0).unwrap();
        assert_eq!(demo.rewards.unwrap(), vec![0.0, 0.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn labeling_requires_actions() {
        let mut demo = demo_of_length(4);
        demo.actions = None;
        assert!(matches!(
            label_rewards(demo, 11.0, -1.0),
            Err(WorldError::MissingActions)
        ));
    }

    #[test]
    fn jsonl_roundtrip_preserves_trajectories() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("demos.jsonl");
        let demos = vec![
            label_rewards(demo_of_length(5), 11.0, -1.0).unwrap(),
            label_rewards(demo_of_length(2), 11.0, -1.0).unwrap(),
        ];
        save_jsonl(&path, &demos).unwrap();
        let loaded = load_jsonl(&path).unwrap();
        assert_eq!(demos, loaded);
    }
}
