//! Hindsight goal and intent sampling over action-free trajectories.

use rand::Rng;
use worlds::Trajectory;

use crate::config::GoalSampler;
use crate::error::{IcvfError, Result};

/// (trajectory index, observation index) into a dataset.
pub type ObsRef = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoalCategory {
    Next,
    Future,
    Random,
}

impl GoalSampler {
    pub fn sample_category(&self, rng: &mut impl Rng) -> GoalCategory {
        let u: f64 = rng.gen();
        if u < self.p_next {
            GoalCategory::Next
        } else if u < self.p_next + self.p_future {
            GoalCategory::Future
        } else {
            GoalCategory::Random
        }
    }
}

/// Future offset with P(k) = (1 - gamma) * gamma^(k-1), k >= 1.
fn geometric_offset(gamma: f64, rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    if gamma <= 0.0 {
        return 1;
    }
    1 + ((1.0 - u).ln() / gamma.ln()).floor().max(0.0) as usize
}

fn sample_one(
    dataset: &[Trajectory],
    traj: usize,
    index: usize,
    sampler: &GoalSampler,
    gamma: f64,
    rng: &mut impl Rng,
) -> ObsRef {
    let len = dataset[traj].len();
    match sampler.sample_category(rng) {
        GoalCategory::Next => (traj, index + 1),
        GoalCategory::Future => {
            let offset = geometric_offset(gamma, rng);
            (traj, (index + offset).min(len - 1))
        }
        GoalCategory::Random => {
            // A random observation from a different trajectory; with a single
            // trajectory the category is unsatisfiable, fall back to next.
            if dataset.len() < 2 {
                return (traj, index + 1);
            }
            let mut other = rng.gen_range(0..dataset.len() - 1);
            if other >= traj {
                other += 1;
            }
            let j = rng.gen_range(0..dataset[other].len());
            (other, j)
        }
    }
}

/// Draw (goal, intent) for the transition starting at `(traj, index)`.
/// The intent is drawn by the same scheme, then replaced by the goal with
/// probability `p_intent_equals_goal`.
pub fn sample_goal_intent(
    dataset: &[Trajectory],
    traj: usize,
    index: usize,
    sampler: &GoalSampler,
    gamma: f64,
    rng: &mut impl Rng,
) -> Result<(ObsRef, ObsRef)> {
    let len = dataset
        .get(traj)
        .map(Trajectory::len)
        .ok_or(IcvfError::EmptyDataset)?;
    if index + 1 >= len {
        return Err(IcvfError::InvalidConfig(format!(
            "transition index {index} out of range for trajectory of length {len}"
        )));
    }
    let goal = sample_one(dataset, traj, index, sampler, gamma, rng);
    let intent = if rng.gen::<f64>() < sampler.p_intent_equals_goal {
        goal
    } else {
        sample_one(dataset, traj, index, sampler, gamma, rng)
    };
    Ok((goal, intent))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tensor_core::rng::seeded_rng;
    use worlds::{Domain, Geometry, GridWorld};

    fn nav_dataset(n_traj: usize, len: usize) -> Vec<Trajectory> {
        let geom = Geometry::open(len + 1, 1, 1).unwrap();
        (0..n_traj)
            .map(|_| {
                let mut w = GridWorld::new(geom.clone(), (0, 0), Domain::Video).unwrap();
                let mut observations = vec![w.observe()];
                for _ in 0..len - 1 {
                    w.step(worlds::Action::Right).unwrap();
                    observations.push(w.observe());
                }
                Trajectory {
                    domain: Domain::Video,
                    task: None,
                    observations,
                    actions: None,
                    rewards: None,
                    success: None,
                }
            })
            .collect()
    }

    #[test]
    fn pure_next_category_returns_the_successor() {
        let data = nav_dataset(3, 6);
        let sampler = GoalSampler {
            p_next: 1.0,
            p_future: 0.0,
            p_random: 0.0,
            p_intent_equals_goal: 0.0,
        };
        let mut rng = seeded_rng(0, "sampler", 0);
        for _ in 0..50 {
            let (g, _) = sample_goal_intent(&data, 1, 2, &sampler, 0.9, &mut rng).unwrap();
            assert_eq!(g, (1, 3));
        }
    }

    #[test]
    fn intent_equals_goal_when_forced() {
        let data = nav_dataset(3, 6);
        let sampler = GoalSampler {
            p_intent_equals_goal: 1.0,
            ..GoalSampler::default()
        };
        let mut rng = seeded_rng(1, "sampler", 0);
        for _ in 0..100 {
            let (g, z) = sample_goal_intent(&data, 0, 1, &sampler, 0.9, &mut rng).unwrap();
            assert_eq!(g, z);
        }
    }

    #[test]
    fn future_category_never_returns_the_start_index() {
        let data = nav_dataset(2, 8);
        let sampler = GoalSampler {
            p_next: 0.0,
            p_future: 1.0,
            p_random: 0.0,
            p_intent_equals_goal: 0.0,
        };
        let mut rng = seeded_rng(2, "sampler", 0);
        for _ in 0..500 {
            let (g, _) = sample_goal_intent(&data, 0, 3, &sampler, 0.9, &mut rng).unwrap();
            assert_eq!(g.0, 0);
            assert!(g.1 >= 4, "future offset must be >= 1, got index {}", g.1);
        }
    }

    #[test]
    fn random_category_draws_from_other_trajectories() {
        let data = nav_dataset(4, 5);
        let sampler = GoalSampler {
            p_next: 0.0,
            p_future: 0.0,
            p_random: 1.0,
            p_intent_equals_goal: 0.0,
        };
        let mut rng = seeded_rng(3, "sampler", 0);
        for _ in 0..200 {
            let (g, _) = sample_goal_intent(&data, 2, 0, &sampler, 0.9, &mut rng).unwrap();
            assert_ne!(g.0, 2);
        }
    }

    #[test]
    fn single_trajectory_random_falls_back_to_next() {
        let data = nav_dataset(1, 5);
        let sampler = GoalSampler {
            p_next: 0.0,
            p_future: 0.0,
            p_random: 1.0,
            p_intent_equals_goal: 0.0,
        };
        let mut rng = seeded_rng(4, "sampler", 0);
        let (g, _) = sample_goal_intent(&data, 0, 2, &sampler, 0.9, &mut rng).unwrap();
        assert_eq!(g, (0, 3));
    }

    /// Monte-Carlo frequency check: 1e5 draws land within 0.01 of the
    /// configured category probabilities.
    #[test]
    fn category_frequencies_match_configuration() {
        let sampler = GoalSampler {
            p_next: 0.2,
            p_future: 0.5,
            p_random: 0.3,
            p_intent_equals_goal: 0.0,
        };
        let mut rng = seeded_rng(0, "sampler-freq", 0);
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            match sampler.sample_category(&mut rng) {
                GoalCategory::Next => counts[0] += 1,
                GoalCategory::Future => counts[1] += 1,
                GoalCategory::Random => counts[2] += 1,
            }
        }
        let freqs: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        for (freq, expected) in freqs.iter().zip([0.2, 0.5, 0.3]) {
            assert!(
                (freq - expected).abs() < 0.01,
                "frequency {freq} vs expected {expected}"
            );
        }
    }

    /// Geometric offsets have mean 1/(1-gamma).
    #[test]
    fn future_offsets_are_geometric() {
        let mut rng = seeded_rng(0, "sampler-geo", 0);
        let gamma: f64 = 0.8;
        let n = 100_000;
        let mean: f64 =
            (0..n).map(|_| geometric_offset(gamma, &mut rng) as f64).sum::<f64>() / n as f64;
        assert!((mean - 1.0 / (1.0 - gamma)).abs() < 0.05, "mean {mean}");
    }
}
