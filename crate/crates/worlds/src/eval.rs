//! Evaluation rollouts over the three test scenarios.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use tensor_core::rng::seeded_rng;

use crate::error::{Result, WorldError};
use crate::gen::WorldModel;
use crate::grid::{Action, Domain, Geometry, GridWorld, Observation, Task, NUM_ACTIONS};
use crate::traj::TaskVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Varied initial agent and object positions.
    Base,
    /// Base plus a distractor object class never seen in training.
    Distractor,
    /// The task object swapped for an object class never seen in training.
    NovelTarget,
}

impl std::str::FromStr for Scenario {
    type Err = WorldError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(Scenario::Base),
            "distractor" => Ok(Scenario::Distractor),
            "novel-target" => Ok(Scenario::NovelTarget),
            other => Err(WorldError::InvalidConfig(format!(
                "unknown scenario {other:?}"
            ))),
        }
    }
}

/// Anything that maps observations to actions.
pub trait Policy {
    fn act(&mut self, obs: &Observation, task: &TaskVector) -> usize;
}

impl<F: FnMut(&Observation, &TaskVector) -> usize> Policy for F {
    fn act(&mut self, obs: &Observation, task: &TaskVector) -> usize {
        self(obs, task)
    }
}

/// Fresh episode for one rollout of `task` under `scenario`.
pub fn init_episode(
    model: &WorldModel,
    task_index: usize,
    scenario: Scenario,
    rng: &mut impl Rng,
) -> Result<(GridWorld, Task)> {
    let mut task = model.task(task_index)?;
    if scenario == Scenario::NovelTarget {
        task.object_class = model.novel_object_class;
    }
    let geometry = model.geometry_for_task(task_index).clone();
    let free = geometry.free_cells();
    let agent = *free
        .choose(rng)
        .ok_or_else(|| WorldError::InvalidConfig("empty world".into()))?;
    let object_cell = sample_excluding(&free, rng, &[task.destination])?;
    let mut world = GridWorld::new(geometry, agent, Domain::Robot)?;
    world.place_object(task.object_class, object_cell)?;
    if scenario == Scenario::Distractor {
        let cell = sample_excluding(&free, rng, &[task.destination, object_cell])?;
        world.place_object(model.eval_distractor_class, cell)?;
    }
    world.set_task(task);
    Ok((world, task))
}

fn sample_excluding(
    free: &[(usize, usize)],
    rng: &mut impl Rng,
    exclude: &[(usize, usize)],
) -> Result<(usize, usize)> {
    let candidates: Vec<(usize, usize)> = free
        .iter()
        .copied()
        .filter(|c| !exclude.contains(c))
        .collect();
    candidates
        .choose(rng)
        .copied()
        .ok_or_else(|| WorldError::InvalidConfig("no cell left to sample".into()))
}

/// Success rate of `policy` over `n_rollouts` episodes with the model's
/// horizon. Rollout r draws its randomness from (seed, "eval-rollout", r),
/// so rollouts are order-independent and may run concurrently on clones.
pub fn evaluate_policy(
    model: &WorldModel,
    policy: &mut dyn Policy,
    task_index: usize,
    n_rollouts: usize,
    scenario: Scenario,
    seed: u64,
) -> Result<f64> {
    if n_rollouts == 0 {
        return Err(WorldError::NoRollouts);
    }
    let task_vector = TaskVector::new(task_index, model.task_dim)
        .map_err(|_| WorldError::UnknownTask(task_index))?;
    let mut successes = 0usize;
    for r in 0..n_rollouts {
        let mut rng = seeded_rng(seed, "eval-rollout", r as u64);
        let (mut world, _) = init_episode(model, task_index, scenario, &mut rng)?;
        for _ in 0..model.horizon {
            if world.task_success() {
                break;
            }
            let action = policy.act(&world.observe(), &task_vector);
            if world.step_index(action.min(NUM_ACTIONS - 1))? {
                break;
            }
        }
        if world.task_success() {
            successes += 1;
        }
    }
    Ok(successes as f64 / n_rollouts as f64)
}

/// Observation-driven scripted controller; the generator's logic re-derived
/// from the rendered state alone. An object absent from its channel is in
/// hand.
pub struct ScriptedPolicy {
    geometry: Geometry,
    task: Task,
}

impl ScriptedPolicy {
    pub fn new(geometry: Geometry, task: Task) -> Self {
        ScriptedPolicy { geometry, task }
    }

    pub fn for_scenario(model: &WorldModel, task_index: usize, scenario: Scenario) -> Result<Self> {
        let mut task = model.task(task_index)?;
        if scenario == Scenario::NovelTarget {
            task.object_class = model.novel_object_class;
        }
        Ok(ScriptedPolicy::new(model.geometry_for_task(task_index).clone(), task))
    }

    fn decode(&self, obs: &Observation, channel: usize) -> Option<(usize, usize)> {
        let plane = match obs.domain {
            Domain::Robot => &obs.grid[channel],
            Domain::Video => &obs.grid[obs.channels - 1 - channel],
        };
        for (y, row) in plane.iter().enumerate() {
            for (x, &v) in row.iter().enumerate() {
                if v != 0 {
                    return match obs.domain {
                        Domain::Robot => Some((x, y)),
                        Domain::Video => Some((y, x)),
                    };
                }
            }
        }
        None
    }
}

impl Policy for ScriptedPolicy {
    fn act(&mut self, obs: &Observation, _task: &TaskVector) -> usize {
        let Some(agent) = self.decode(obs, 0) else {
            return Action::Interact.index();
        };
        let object = self.decode(obs, 2 + self.task.object_class);
        let goal = match object {
            None => self.task.destination,   // attached: deliver
            Some(cell) => cell,              // on the grid: go pick it up
        };
        if agent == goal {
            return Action::Interact.index();
        }
        let dist = self.geometry.distances_to(goal);
        let here = match dist.get(&agent) {
            Some(&d) => d,
            None => return Action::Interact.index(),
        };
        for action in [Action::Up, Action::Down, Action::Left, Action::Right] {
            let next = self.geometry.nav_next(agent, action);
            if next != agent && dist.get(&next) == Some(&(here - 1)) {
                return action.index();
            }
        }
        Action::Interact.index()
    }
}

/// Uniform-random reference policy.
pub struct RandomPolicy {
    rng: rand_chacha::ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        RandomPolicy {
            rng: seeded_rng(seed, "random-policy", 0),
        }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, _obs: &Observation, _task: &TaskVector) -> usize {
        self.rng.gen_range(0..NUM_ACTIONS)
    }
}
