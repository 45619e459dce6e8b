use serde::{Deserialize, Serialize};

use crate::error::{IcvfError, Result};

/// Goal/intent sampling mixture: next observation, geometrically distributed
/// future observation from the same trajectory, or a random observation from
/// a different trajectory. Intents are drawn the same way and then replaced
/// by the goal with probability `p_intent_equals_goal`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GoalSampler {
    pub p_next: f64,
    pub p_future: f64,
    pub p_random: f64,
    pub p_intent_equals_goal: f64,
}

impl Default for GoalSampler {
    fn default() -> Self {
        GoalSampler {
            p_next: 0.2,
            p_future: 0.5,
            p_random: 0.3,
            p_intent_equals_goal: 0.5,
        }
    }
}

impl GoalSampler {
    pub fn validate(&self) -> Result<()> {
        let probs = [self.p_next, self.p_future, self.p_random];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(IcvfError::InvalidConfig(
                "sampler probabilities must be in [0,1]".into(),
            ));
        }
        if (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(IcvfError::InvalidConfig(
                "sampler category probabilities must sum to 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.p_intent_equals_goal) {
            return Err(IcvfError::InvalidConfig(
                "p_intent_equals_goal must be in [0,1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    Constant,
    /// Cosine annealed to zero over the full step budget.
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IcvfConfig {
    pub gamma: f64,
    /// Expectile weight; 0.5 degenerates to symmetric squared TD error.
    pub expectile: f64,
    pub target_update_rate: f64,
    /// Apply the target update every this many steps.
    pub target_update_every: usize,
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub lr_schedule: LrSchedule,
    /// Mask the bootstrap where the goal is reached, so converged values on
    /// deterministic worlds are exactly gamma^distance.
    pub terminate_at_goal: bool,
    pub sampler: GoalSampler,
    pub metrics_every: usize,
}

impl Default for IcvfConfig {
    fn default() -> Self {
        IcvfConfig {
            gamma: 0.9,
            expectile: 0.9,
            target_update_rate: 0.005,
            target_update_every: 1,
            steps: 50_000,
            batch_size: 64,
            lr: 1e-4,
            lr_schedule: LrSchedule::Cosine,
            terminate_at_goal: true,
            sampler: GoalSampler::default(),
            metrics_every: 500,
        }
    }
}

impl IcvfConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.gamma && self.gamma < 1.0) {
            return Err(IcvfError::InvalidConfig("gamma must be in (0,1)".into()));
        }
        if !(0.5..1.0).contains(&self.expectile) {
            return Err(IcvfError::InvalidConfig(
                "expectile must be in [0.5, 1)".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.target_update_rate) {
            return Err(IcvfError::InvalidConfig(
                "target update rate must be in [0,1]".into(),
            ));
        }
        if self.batch_size == 0 || self.target_update_every == 0 || self.metrics_every == 0 {
            return Err(IcvfError::InvalidConfig(
                "batch size and intervals must be positive".into(),
            ));
        }
        self.sampler.validate()
    }

    /// Learning rate at a 0-based step.
    pub fn lr_at(&self, step: usize) -> f64 {
        match self.lr_schedule {
            LrSchedule::Constant => self.lr,
            LrSchedule::Cosine => {
                if self.steps == 0 {
                    self.lr
                } else {
                    let t = step as f64 / self.steps as f64;
                    self.lr * 0.5 * (1.0 + (std::f64::consts::PI * t).cos())
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expectile_half_is_allowed_but_one_is_not() {
        let mut c = IcvfConfig {
            expectile: 0.5,
            ..IcvfConfig::default()
        };
        c.validate().unwrap();
        c.expectile = 1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn cosine_schedule_anneals_to_zero() {
        let c = IcvfConfig {
            steps: 100,
            lr: 1e-3,
            ..IcvfConfig::default()
        };
        assert_eq!(c.lr_at(0), 1e-3);
        assert!(c.lr_at(50) < 1e-3 * 0.51);
        assert!(c.lr_at(100) < 1e-12);
    }

    #[test]
    fn sampler_probabilities_must_sum_to_one() {
        let s = GoalSampler {
            p_next: 0.5,
            p_future: 0.5,
            p_random: 0.5,
            p_intent_equals_goal: 0.0,
        };
        assert!(s.validate().is_err());
    }
}
