//! Scripted data generation for the three datasets: action-free video
//! trajectories, annotated multi-task robot demonstrations, and a small
//! target-task demonstration set in a different workspace.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use tensor_core::rng::seeded_rng;

use crate::error::{Result, WorldError};
use crate::grid::{Action, Domain, Geometry, GridWorld, Task, NUM_ACTIONS};
use crate::traj::{label_rewards, TaskVector, Trajectory};

/// Where episode starts may be sampled from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartRegion {
    /// Anywhere free.
    Full,
    /// Top-left quadrant only; used for target demos so evaluation starts
    /// are more diverse than the demonstrations.
    TopLeft,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub width: usize,
    pub height: usize,
    pub n_walls: usize,
    pub object_classes: usize,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            width: 6,
            height: 6,
            n_walls: 4,
            object_classes: 6,
        }
    }
}

/// Generation knobs for one [`DatasetBundle`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub world: WorldConfig,

    pub n_video: usize,
    /// Scripted-policy noise: probability of a uniform random action.
    pub video_noise: f64,
    pub video_max_len: usize,
    /// Distinct wall layouts sampled for the video data.
    pub video_layouts: usize,

    pub n_pretrain_tasks: usize,
    pub n_per_task: usize,
    pub robot_noise: f64,

    pub n_target: usize,
    pub target_noise: f64,
    pub target_start: StartRegion,
    /// Fraction of robot/target demos that include a distractor object.
    pub distractor_fraction: f64,

    pub demo_max_len: usize,
    pub reward_scale: f64,
    pub reward_bias: f64,

    /// Reserved one-hot slots beyond the pre-training tasks.
    pub reserved_task_slots: usize,
    pub horizon: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            world: WorldConfig::default(),
            n_video: 150,
            video_noise: 0.2,
            video_max_len: 60,
            video_layouts: 3,
            n_pretrain_tasks: 2,
            n_per_task: 25,
            robot_noise: 0.2,
            n_target: 10,
            target_noise: 0.1,
            target_start: StartRegion::TopLeft,
            distractor_fraction: 0.5,
            demo_max_len: 80,
            reward_scale: 11.0,
            reward_bias: -1.0,
            reserved_task_slots: 4,
            horizon: 40,
        }
    }
}

impl GenConfig {
    pub fn task_dim(&self) -> usize {
        self.n_pretrain_tasks + self.reserved_task_slots
    }

    /// Object class moved by the target task.
    pub fn target_object_class(&self) -> usize {
        self.n_pretrain_tasks
    }

    pub fn train_distractor_class(&self) -> usize {
        self.n_pretrain_tasks + 1
    }

    pub fn eval_distractor_class(&self) -> usize {
        self.n_pretrain_tasks + 2
    }

    pub fn novel_object_class(&self) -> usize {
        self.n_pretrain_tasks + 3
    }

    pub fn validate(&self) -> Result<()> {
        if self.world.width == 0 || self.world.height == 0 {
            return Err(WorldError::InvalidConfig("zero-sized world".into()));
        }
        if !(0.0..=1.0).contains(&self.video_noise)
            || !(0.0..=1.0).contains(&self.robot_noise)
            || !(0.0..=1.0).contains(&self.target_noise)
            || !(0.0..=1.0).contains(&self.distractor_fraction)
        {
            return Err(WorldError::InvalidConfig(
                "noise and fractions must be in [0,1]".into(),
            ));
        }
        if self.n_pretrain_tasks < 1 {
            return Err(WorldError::InvalidConfig("need at least one task".into()));
        }
        if self.reserved_task_slots < 1 {
            return Err(WorldError::InvalidConfig(
                "need a reserved slot for the target task".into(),
            ));
        }
        // Classes: one per pre-training task, target object, train distractor,
        // eval distractor, novel object.
        let needed = self.n_pretrain_tasks + 4;
        if self.world.object_classes < needed {
            return Err(WorldError::InvalidConfig(format!(
                "need {needed} object classes, config has {}",
                self.world.object_classes
            )));
        }
        if self.demo_max_len < 2 || self.video_max_len < 2 {
            return Err(WorldError::InvalidConfig("max lengths too small".into()));
        }
        Ok(())
    }
}

/// Everything evaluation needs to rebuild episodes: the two workspaces, the
/// realized task table, and the class allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldModel {
    pub robot_geometry: Geometry,
    pub target_geometry: Geometry,
    /// Task by one-hot index; reserved slots without a task stay `None`.
    pub tasks: Vec<Option<Task>>,
    pub n_pretrain_tasks: usize,
    pub task_dim: usize,
    pub train_distractor_class: usize,
    pub eval_distractor_class: usize,
    pub novel_object_class: usize,
    pub horizon: usize,
}

impl WorldModel {
    pub fn task(&self, index: usize) -> Result<Task> {
        self.tasks
            .get(index)
            .copied()
            .flatten()
            .ok_or(WorldError::UnknownTask(index))
    }

    pub fn geometry_for_task(&self, index: usize) -> &Geometry {
        if index >= self.n_pretrain_tasks {
            &self.target_geometry
        } else {
            &self.robot_geometry
        }
    }
}

/// The three datasets plus the provenance needed to regenerate them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetBundle {
    pub config: GenConfig,
    pub seed: u64,
    pub world_model: WorldModel,
    pub video: Vec<Trajectory>,
    pub robot: Vec<Trajectory>,
    pub target: Vec<Trajectory>,
}

/// Rejection-sample a wall layout whose free cells stay connected.
pub fn sample_layout(config: &WorldConfig, seed: u64) -> Result<Geometry> {
    let cells: Vec<(usize, usize)> = (0..config.height)
        .flat_map(|y| (0..config.width).map(move |x| (x, y)))
        .collect();
    if config.n_walls + 2 > cells.len() {
        return Err(WorldError::InvalidConfig("too many walls".into()));
    }
    const ATTEMPTS: usize = 200;
    for attempt in 0..ATTEMPTS {
        let mut rng = seeded_rng(seed, "layout", attempt as u64);
        let mut geom = Geometry::open(config.width, config.height, config.object_classes)?;
        let walls = cells
            .choose_multiple(&mut rng, config.n_walls)
            .copied()
            .collect();
        geom.walls = walls;
        if geom.all_free_connected() {
            return Ok(geom);
        }
    }
    Err(WorldError::LayoutRejected(ATTEMPTS))
}

fn sample_free_cell(
    geom: &Geometry,
    rng: &mut impl Rng,
    region: StartRegion,
    exclude: &[(usize, usize)],
) -> Result<(usize, usize)> {
    let candidates: Vec<(usize, usize)> = geom
        .free_cells()
        .into_iter()
        .filter(|&(x, y)| match region {
            StartRegion::Full => true,
            StartRegion::TopLeft => x <= geom.width / 2 && y <= geom.height / 2,
        })
        .filter(|c| !exclude.contains(c))
        .collect();
    candidates
        .choose(rng)
        .copied()
        .ok_or_else(|| WorldError::InvalidConfig("no free cell to sample".into()))
}

/// Greedy BFS step toward `goal`, ties broken by action order.
fn nav_action_toward(geom: &Geometry, from: (usize, usize), goal: (usize, usize)) -> Result<Action> {
    let dist = geom.distances_to(goal);
    let here = *dist
        .get(&from)
        .ok_or(WorldError::UnreachableGoal { start: from, goal })?;
    for action in [Action::Up, Action::Down, Action::Left, Action::Right] {
        let next = geom.nav_next(from, action);
        if next != from && dist.get(&next) == Some(&(here - 1)) {
            return Ok(action);
        }
    }
    Err(WorldError::UnreachableGoal { start: from, goal })
}

fn noisy(action: Action, noise: f64, rng: &mut impl Rng) -> Action {
    if noise > 0.0 && rng.gen::<f64>() < noise {
        Action::from_index(rng.gen_range(0..NUM_ACTIONS)).unwrap()
    } else {
        action
    }
}

/// Action-free noisy goal-directed rollouts in video-domain rendering.
pub fn generate_video_dataset(config: &GenConfig, seed: u64) -> Result<Vec<Trajectory>> {
    config.validate()?;
    let layouts: Vec<Geometry> = (0..config.video_layouts.max(1))
        .map(|i| {
            sample_layout(
                &config.world,
                tensor_core::rng::derive_seed(seed, "video-layout", i as u64),
            )
        })
        .collect::<Result<_>>()?;

    let mut out = Vec::with_capacity(config.n_video);
    for i in 0..config.n_video {
        let mut rng = seeded_rng(seed, "video-traj", i as u64);
        let geom = layouts[i % layouts.len()].clone();
        let start = sample_free_cell(&geom, &mut rng, StartRegion::Full, &[])?;
        let goal = sample_free_cell(&geom, &mut rng, StartRegion::Full, &[start])?;
        let mut world = GridWorld::new(geom, start, Domain::Video)?;

        let mut observations = vec![world.observe()];
        while world.agent != goal && observations.len() < config.video_max_len {
            let planned = nav_action_toward(&world.geometry, world.agent, goal)?;
            let action = noisy(planned, config.video_noise, &mut rng);
            world.step(action)?;
            observations.push(world.observe());
        }
        out.push(Trajectory {
            domain: Domain::Video,
            task: None,
            observations,
            actions: None,
            rewards: None,
            success: None,
        });
    }
    Ok(out)
}

/// One scripted pick-and-place action for the current world state.
/// Handles noise-induced detours: drops a wrongly attached object and
/// re-plans toward wherever the task object currently sits.
fn scripted_task_action(world: &GridWorld, task: &Task) -> Result<Action> {
    match world.carrying {
        Some(class) if class == task.object_class => {
            if world.agent == task.destination {
                Ok(Action::Interact)
            } else {
                nav_action_toward(&world.geometry, world.agent, task.destination)
            }
        }
        Some(_) => Ok(Action::Interact),
        None => {
            let obj_cell = *world
                .objects
                .get(&task.object_class)
                .ok_or(WorldError::NoActiveTask)?;
            if world.agent == obj_cell {
                Ok(Action::Interact)
            } else {
                nav_action_toward(&world.geometry, world.agent, obj_cell)
            }
        }
    }
}

struct DemoSetup<'a> {
    geometry: &'a Geometry,
    task: Task,
    task_vector: TaskVector,
    noise: f64,
    start_region: StartRegion,
    distractor_class: usize,
    with_distractor: bool,
}

/// Run one scripted demo to success; retries with a fresh stream on the rare
/// noise-driven overruns so every returned demo ends in success.
fn generate_demo(setup: &DemoSetup, config: &GenConfig, seed: u64, index: u64) -> Result<Trajectory> {
    const RETRIES: u64 = 100;
    'attempt: for attempt in 0..RETRIES {
        let mut rng = seeded_rng(seed, "demo", index * RETRIES + attempt);
        let destination = setup.task.destination;
        let obj_cell = sample_free_cell(setup.geometry, &mut rng, StartRegion::Full, &[destination])?;
        let agent = sample_free_cell(setup.geometry, &mut rng, setup.start_region, &[])?;
        let mut world = GridWorld::new(setup.geometry.clone(), agent, Domain::Robot)?;
        world.place_object(setup.task.object_class, obj_cell)?;
        if setup.with_distractor {
            let cell =
                sample_free_cell(setup.geometry, &mut rng, StartRegion::Full, &[destination, obj_cell])?;
            world.place_object(setup.distractor_class, cell)?;
        }
        world.set_task(setup.task);

        let mut observations = vec![world.observe()];
        let mut actions = Vec::new();
        let mut success = false;
        while observations.len() < config.demo_max_len {
            let planned = scripted_task_action(&world, &setup.task)?;
            let action = noisy(planned, setup.noise, &mut rng);
            success = world.step(action)?;
            actions.push(action.index());
            observations.push(world.observe());
            if success {
                break;
            }
        }
        if !success {
            continue 'attempt;
        }
        let demo = Trajectory {
            domain: Domain::Robot,
            task: Some(setup.task_vector),
            observations,
            actions: Some(actions),
            rewards: None,
            success: Some(true),
        };
        return label_rewards(demo, config.reward_scale, config.reward_bias);
    }
    Err(WorldError::LayoutRejected(RETRIES as usize))
}

fn build_tasks(
    config: &GenConfig,
    geometry: &Geometry,
    target_geometry: &Geometry,
    seed: u64,
) -> Result<Vec<Option<Task>>> {
    let mut tasks: Vec<Option<Task>> = vec![None; config.task_dim()];
    for t in 0..config.n_pretrain_tasks {
        let mut rng = seeded_rng(seed, "task-dest", t as u64);
        let destination = sample_free_cell(geometry, &mut rng, StartRegion::Full, &[])?;
        tasks[t] = Some(Task {
            task_index: t,
            object_class: t,
            destination,
        });
    }
    // Target task: first reserved slot, its own object class and workspace.
    let target_index = config.n_pretrain_tasks;
    let mut rng = seeded_rng(seed, "task-dest", target_index as u64);
    let destination = sample_free_cell(target_geometry, &mut rng, StartRegion::Full, &[])?;
    tasks[target_index] = Some(Task {
        task_index: target_index,
        object_class: config.target_object_class(),
        destination,
    });
    Ok(tasks)
}

/// Annotated multi-task demonstrations in the robot workspace.
pub fn generate_robot_dataset(
    config: &GenConfig,
    world_model: &WorldModel,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    config.validate()?;
    if config.n_pretrain_tasks < 2 && config.n_per_task > 0 {
        return Err(WorldError::InvalidConfig(
            "multi-task pre-training needs at least 2 tasks".into(),
        ));
    }
    let mut out = Vec::with_capacity(config.n_pretrain_tasks * config.n_per_task);
    for t in 0..config.n_pretrain_tasks {
        let task = world_model.task(t)?;
        for d in 0..config.n_per_task {
            let index = (t * config.n_per_task + d) as u64;
            let mut rng = seeded_rng(seed, "demo-flags", index);
            let setup = DemoSetup {
                geometry: &world_model.robot_geometry,
                task,
                task_vector: TaskVector::new(t, config.task_dim())
                    .map_err(|_| WorldError::UnknownTask(t))?,
                noise: config.robot_noise,
                start_region: StartRegion::Full,
                distractor_class: world_model.train_distractor_class,
                with_distractor: rng.gen::<f64>() < config.distractor_fraction,
            };
            out.push(generate_demo(&setup, config, seed, index)?);
        }
    }
    Ok(out)
}

/// Few-shot target-task demonstrations in the held-out workspace.
pub fn generate_target_dataset(
    config: &GenConfig,
    world_model: &WorldModel,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    config.validate()?;
    let target_index = config.n_pretrain_tasks;
    let task = world_model.task(target_index)?;
    let mut out = Vec::with_capacity(config.n_target);
    for d in 0..config.n_target {
        let index = (config.n_pretrain_tasks * config.n_per_task + d) as u64;
        let mut rng = seeded_rng(seed, "demo-flags", index);
        let setup = DemoSetup {
            geometry: &world_model.target_geometry,
            task,
            task_vector: TaskVector::new(target_index, config.task_dim())
                .map_err(|_| WorldError::UnknownTask(target_index))?,
            noise: config.target_noise,
            start_region: config.target_start,
            distractor_class: world_model.train_distractor_class,
            with_distractor: rng.gen::<f64>() < config.distractor_fraction,
        };
        out.push(generate_demo(&setup, config, seed, index)?);
    }
    Ok(out)
}

impl DatasetBundle {
    /// Generate all three datasets deterministically from (config, seed).
    pub fn generate(config: GenConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let robot_geometry = sample_layout(
            &config.world,
            tensor_core::rng::derive_seed(seed, "robot-layout", 0),
        )?;
        let target_geometry = sample_layout(
            &config.world,
            tensor_core::rng::derive_seed(seed, "target-layout", 0),
        )?;
        let tasks = build_tasks(&config, &robot_geometry, &target_geometry, seed)?;
        let world_model = WorldModel {
            robot_geometry,
            target_geometry,
            tasks,
            n_pretrain_tasks: config.n_pretrain_tasks,
            task_dim: config.task_dim(),
            train_distractor_class: config.train_distractor_class(),
            eval_distractor_class: config.eval_distractor_class(),
            novel_object_class: config.novel_object_class(),
            horizon: config.horizon,
        };
        let video = generate_video_dataset(&config, seed)?;
        let robot = generate_robot_dataset(&config, &world_model, seed)?;
        let target = generate_target_dataset(&config, &world_model, seed)?;
        let bundle = DatasetBundle {
            config,
            seed,
            world_model,
            video,
            robot,
            target,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    /// Task-id disjointness and per-dataset annotation invariants.
    pub fn validate(&self) -> Result<()> {
        for t in &self.video {
            if t.actions.is_some() || t.rewards.is_some() || t.task.is_some() {
                return Err(WorldError::MalformedDataset(
                    "video trajectories must be observation-only".into(),
                ));
            }
        }
        let robot_ids: std::collections::BTreeSet<usize> =
            self.robot.iter().filter_map(|t| t.task.map(|v| v.index)).collect();
        let target_ids: std::collections::BTreeSet<usize> =
            self.target.iter().filter_map(|t| t.task.map(|v| v.index)).collect();
        if robot_ids.intersection(&target_ids).next().is_some() {
            return Err(WorldError::MalformedDataset(
                "target task ids overlap pre-training task ids".into(),
            ));
        }
        for t in self.robot.iter().chain(&self.target) {
            t.validate()?;
            if t.actions.is_none() {
                return Err(WorldError::MissingAnnotation("actions"));
            }
            if t.rewards.is_none() {
                return Err(WorldError::MissingAnnotation("rewards"));
            }
            if t.task.is_none() {
                return Err(WorldError::MissingAnnotation("task"));
            }
        }
        Ok(())
    }
}
