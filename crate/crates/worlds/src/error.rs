use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("no connected layout found after {0} attempts")]
    LayoutRejected(usize),

    #[error("goal {goal:?} unreachable from {start:?}")]
    UnreachableGoal {
        start: (usize, usize),
        goal: (usize, usize),
    },

    #[error("trajectory has no actions")]
    MissingActions,

    #[error("trajectory is missing {0}")]
    MissingAnnotation(&'static str),

    #[error("cannot step a finished episode")]
    EpisodeDone,

    #[error("invalid action index {0}")]
    InvalidAction(usize),

    #[error("unknown task index {0}")]
    UnknownTask(usize),

    #[error("world has no active task")]
    NoActiveTask,

    #[error("observation does not match world geometry: {0}")]
    BadObservation(String),

    #[error("state space too large: {states} states (limit {limit})")]
    StateSpaceTooLarge { states: usize, limit: usize },

    #[error("evaluation needs at least one rollout")]
    NoRollouts,

    #[error("malformed dataset file: {0}")]
    MalformedDataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, WorldError>;
