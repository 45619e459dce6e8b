//! Synthetic gridworld environments, scripted dataset generation for the
//! three training datasets (action-free video, annotated multi-task robot
//! demos, few-shot target demos), reward labeling, and evaluation rollouts.

mod error;
mod eval;
mod gen;
mod grid;
mod traj;

pub use error::{Result, WorldError};
pub use eval::{evaluate_policy, init_episode, Policy, RandomPolicy, Scenario, ScriptedPolicy};
pub use gen::{
    generate_robot_dataset, generate_target_dataset, generate_video_dataset, sample_layout,
    DatasetBundle, GenConfig, StartRegion, WorldConfig, WorldModel,
};
pub use grid::{
    video_to_robot_grid, Action, Domain, Geometry, GridWorld, Observation, Task, ACTIONS,
    NUM_ACTIONS,
};
pub use traj::{label_rewards, load_jsonl, save_jsonl, TaskVector, Trajectory};
