//! Grid geometry, world state, rendering, and dynamics.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Result, WorldError};

pub const NUM_ACTIONS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Interact,
}

pub const ACTIONS: [Action; NUM_ACTIONS] = [
    Action::Up,
    Action::Down,
    Action::Left,
    Action::Right,
    Action::Interact,
];

impl Action {
    pub fn from_index(i: usize) -> Result<Action> {
        ACTIONS
            .get(i)
            .copied()
            .ok_or(WorldError::InvalidAction(i))
    }

    pub fn index(self) -> usize {
        ACTIONS.iter().position(|&a| a == self).unwrap()
    }
}

/// Which dataset's rendering convention an observation uses. The video domain
/// applies a fixed channel permutation (reversal) and a spatial transpose to
/// the robot-domain tensor, and carries no proprioception.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Robot,
    Video,
}

/// Static geometry shared by a world and every observation rendered from it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Geometry {
    pub width: usize,
    pub height: usize,
    pub walls: BTreeSet<(usize, usize)>,
    /// Number of object channels; total channels = 2 + this.
    pub object_classes: usize,
}

impl Geometry {
    pub fn open(width: usize, height: usize, object_classes: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(WorldError::InvalidConfig("zero-sized world".into()));
        }
        Ok(Geometry {
            width,
            height,
            walls: BTreeSet::new(),
            object_classes,
        })
    }

    pub fn channels(&self) -> usize {
        2 + self.object_classes
    }

    pub fn in_bounds(&self, cell: (usize, usize)) -> bool {
        cell.0 < self.width && cell.1 < self.height
    }

    pub fn is_wall(&self, cell: (usize, usize)) -> bool {
        self.walls.contains(&cell)
    }

    pub fn is_free(&self, cell: (usize, usize)) -> bool {
        self.in_bounds(cell) && !self.is_wall(cell)
    }

    /// Free cells in row-major order; the canonical state enumeration.
    pub fn free_cells(&self) -> Vec<(usize, usize)> {
        let mut cells = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if !self.is_wall((x, y)) {
                    cells.push((x, y));
                }
            }
        }
        cells
    }

    /// Where a movement action leads; bumping walls or the border stays put.
    /// Interact never moves.
    pub fn nav_next(&self, cell: (usize, usize), action: Action) -> (usize, usize) {
        let (x, y) = cell;
        let target = match action {
            Action::Up => (x, y.wrapping_sub(1)),
            Action::Down => (x, y + 1),
            Action::Left => (x.wrapping_sub(1), y),
            Action::Right => (x + 1, y),
            Action::Interact => (x, y),
        };
        if self.is_free(target) {
            target
        } else {
            cell
        }
    }

    /// BFS distances from `goal` over free cells; unreachable cells get None.
    pub fn distances_to(&self, goal: (usize, usize)) -> BTreeMap<(usize, usize), usize> {
        let mut dist = BTreeMap::new();
        if !self.is_free(goal) {
            return dist;
        }
        dist.insert(goal, 0);
        let mut queue = VecDeque::from([goal]);
        while let Some(cell) = queue.pop_front() {
            let d = dist[&cell];
            for action in [Action::Up, Action::Down, Action::Left, Action::Right] {
                let next = self.nav_next(cell, action);
                if next != cell && !dist.contains_key(&next) {
                    dist.insert(next, d + 1);
                    queue.push_back(next);
                }
            }
        }
        dist
    }

    pub fn all_free_connected(&self) -> bool {
        let free = self.free_cells();
        match free.first() {
            None => false,
            Some(&start) => self.distances_to(start).len() == free.len(),
        }
    }
}

/// One-hot occupancy tensor plus optional proprioception.
///
/// Layout is `[channel][y][x]` row-major in the tensor's own frame; the video
/// domain stores the transposed frame, so its `height`/`width` are swapped
/// relative to the world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub domain: Domain,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub grid: Vec<Vec<Vec<u8>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub proprio: Option<Vec<f64>>,
}

impl Observation {
    /// Flattened grid as f64, the encoder input.
    pub fn grid_features(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.channels * self.height * self.width);
        for c in &self.grid {
            for row in c {
                out.extend(row.iter().map(|&v| f64::from(v)));
            }
        }
        out
    }

    pub fn grid_len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn proprio_slice(&self) -> &[f64] {
        self.proprio.as_deref().unwrap_or(&[])
    }

    /// Exact equality of the occupancy tensor (the goal-reached predicate).
    pub fn same_grid(&self, other: &Observation) -> bool {
        self.grid == other.grid
    }

    fn channel_pos(&self, channel: usize) -> Option<(usize, usize)> {
        let plane = &self.grid[channel];
        for (y, row) in plane.iter().enumerate() {
            for (x, &v) in row.iter().enumerate() {
                if v != 0 {
                    return Some((x, y));
                }
            }
        }
        None
    }
}

/// Map a video-domain observation back to its robot-domain occupancy tensor.
/// The rendering gap is a channel reversal plus a spatial transpose, so the
/// inverse is exact.
pub fn video_to_robot_grid(obs: &Observation) -> Result<Vec<Vec<Vec<u8>>>> {
    if obs.domain != Domain::Video {
        return Err(WorldError::BadObservation("not a video-domain tensor".into()));
    }
    let c = obs.channels;
    // Video frame is [c][x][y] of the robot frame, channels reversed.
    let (vh, vw) = (obs.height, obs.width);
    let mut out = vec![vec![vec![0u8; vh]; vw]; c];
    for (vc, plane) in obs.grid.iter().enumerate() {
        let rc = c - 1 - vc;
        for (y, row) in plane.iter().enumerate() {
            for (x, &v) in row.iter().enumerate() {
                out[rc][x][y] = v;
            }
        }
    }
    Ok(out)
}

/// A pick-and-place task: carry one object class to a destination cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    /// Index into the one-hot task universe.
    pub task_index: usize,
    /// Which object channel the task manipulates.
    pub object_class: usize,
    pub destination: (usize, usize),
}

/// Full world state. Cloning yields an independent simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridWorld {
    pub geometry: Geometry,
    /// Object class -> cell, for objects currently on the grid.
    pub objects: BTreeMap<usize, (usize, usize)>,
    pub agent: (usize, usize),
    /// Object class currently attached to the agent, if any.
    pub carrying: Option<usize>,
    pub style: Domain,
    pub task: Option<Task>,
    pub done: bool,
}

impl GridWorld {
    pub fn new(geometry: Geometry, agent: (usize, usize), style: Domain) -> Result<Self> {
        if !geometry.is_free(agent) {
            return Err(WorldError::InvalidConfig(format!(
                "agent at non-free cell {agent:?}"
            )));
        }
        Ok(GridWorld {
            geometry,
            objects: BTreeMap::new(),
            agent,
            carrying: None,
            style,
            task: None,
            done: false,
        })
    }

    pub fn place_object(&mut self, class: usize, cell: (usize, usize)) -> Result<()> {
        if class >= self.geometry.object_classes {
            return Err(WorldError::InvalidConfig(format!(
                "object class {class} out of range"
            )));
        }
        if !self.geometry.is_free(cell) {
            return Err(WorldError::InvalidConfig(format!(
                "object at non-free cell {cell:?}"
            )));
        }
        self.objects.insert(class, cell);
        Ok(())
    }

    pub fn set_task(&mut self, task: Task) {
        self.task = Some(task);
        self.done = false;
    }

    /// True when the task object sits at the destination and is not attached.
    pub fn task_success(&self) -> bool {
        match &self.task {
            None => false,
            Some(task) => {
                self.carrying != Some(task.object_class)
                    && self.objects.get(&task.object_class) == Some(&task.destination)
            }
        }
    }

    /// Deterministic dynamics. Movement into walls or off-grid stays put;
    /// interact picks up an object on the agent's cell (attaching it) or puts
    /// an attached object down on the agent's cell.
    pub fn step(&mut self, action: Action) -> Result<bool> {
        if self.done {
            return Err(WorldError::EpisodeDone);
        }
        match action {
            Action::Interact => match self.carrying {
                Some(class) => {
                    self.objects.insert(class, self.agent);
                    self.carrying = None;
                }
                None => {
                    let here = self
                        .objects
                        .iter()
                        .find(|(_, &cell)| cell == self.agent)
                        .map(|(&class, _)| class);
                    if let Some(class) = here {
                        self.objects.remove(&class);
                        self.carrying = Some(class);
                    }
                }
            },
            movement => {
                self.agent = self.geometry.nav_next(self.agent, movement);
            }
        }
        let success = self.task_success();
        if success {
            self.done = true;
        }
        Ok(success)
    }

    pub fn step_index(&mut self, action: usize) -> Result<bool> {
        self.step(Action::from_index(action)?)
    }

    /// Render the current state in the world's own domain style.
    ///
    /// Attached objects are not rendered: an object missing from its channel
    /// is in hand, which keeps the state fully observable.
    pub fn observe(&self) -> Observation {
        let g = &self.geometry;
        let c = g.channels();
        let mut robot = vec![vec![vec![0u8; g.width]; g.height]; c];
        robot[0][self.agent.1][self.agent.0] = 1;
        for &(x, y) in &g.walls {
            robot[1][y][x] = 1;
        }
        for (&class, &(x, y)) in &self.objects {
            robot[2 + class][y][x] = 1;
        }
        match self.style {
            Domain::Robot => {
                let wx = (g.width.max(2) - 1) as f64;
                let wy = (g.height.max(2) - 1) as f64;
                Observation {
                    domain: Domain::Robot,
                    channels: c,
                    height: g.height,
                    width: g.width,
                    grid: robot,
                    proprio: Some(vec![self.agent.0 as f64 / wx, self.agent.1 as f64 / wy]),
                }
            }
            Domain::Video => {
                // Reverse channels, transpose x/y.
                let mut video = vec![vec![vec![0u8; g.height]; g.width]; c];
                for (rc, plane) in robot.iter().enumerate() {
                    let vc = c - 1 - rc;
                    for (y, row) in plane.iter().enumerate() {
                        for (x, &v) in row.iter().enumerate() {
                            video[vc][x][y] = v;
                        }
                    }
                }
                Observation {
                    domain: Domain::Video,
                    channels: c,
                    height: g.width,
                    width: g.height,
                    grid: video,
                    proprio: None,
                }
            }
        }
    }

    /// Agent cell recovered from an observation rendered by this geometry.
    pub fn agent_cell_of(geometry: &Geometry, obs: &Observation) -> Result<(usize, usize)> {
        let pos = match obs.domain {
            Domain::Robot => obs.channel_pos(0),
            Domain::Video => {
                // Agent channel is the last one in the video frame; positions
                // are transposed.
                obs.channel_pos(obs.channels - 1).map(|(x, y)| (y, x))
            }
        };
        match pos {
            Some(cell) if geometry.is_free(cell) => Ok(cell),
            _ => Err(WorldError::BadObservation("no agent cell".into())),
        }
    }

    /// Index of the agent's cell in the canonical free-cell enumeration.
    pub fn state_index_of(geometry: &Geometry, obs: &Observation) -> Result<usize> {
        let cell = Self::agent_cell_of(geometry, obs)?;
        geometry
            .free_cells()
            .iter()
            .position(|&c| c == cell)
            .ok_or_else(|| WorldError::BadObservation(format!("cell {cell:?} not free")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world_3x3() -> GridWorld {
        let mut geom = Geometry::open(3, 3, 2).unwrap();
        geom.walls.insert((1, 1));
        GridWorld::new(geom, (0, 0), Domain::Robot).unwrap()
    }

    #[test]
    fn moving_into_walls_and_borders_stays_put() {
        let mut w = world_3x3();
        w.step(Action::Up).unwrap();
        assert_eq!(w.agent, (0, 0));
        w.step(Action::Left).unwrap();
        assert_eq!(w.agent, (0, 0));
        w.step(Action::Down).unwrap();
        assert_eq!(w.agent, (0, 1));
        w.step(Action::Right).unwrap(); // (1,1) is a wall
        assert_eq!(w.agent, (0, 1));
    }

    #[test]
    fn interact_picks_up_and_places_for_success() {
        let mut w = world_3x3();
        w.place_object(0, (0, 0)).unwrap();
        w.set_task(Task {
            task_index: 0,
            object_class: 0,
            destination: (2, 0),
        });
        assert!(!w.step(Action::Interact).unwrap());
        assert_eq!(w.carrying, Some(0));
        assert!(w.objects.is_empty());
        w.step(Action::Right).unwrap();
        assert!(!w.step(Action::Interact).unwrap()); // drop at (1,0)
        assert_eq!(w.carrying, None);
        assert!(!w.step(Action::Interact).unwrap()); // pick it back up
        w.step(Action::Right).unwrap();
        let success = w.step(Action::Interact).unwrap();
        assert!(success);
        assert!(w.done);
        assert!(matches!(w.step(Action::Up), Err(WorldError::EpisodeDone)));
    }

    #[test]
    fn hundred_step_random_walk_stays_in_bounds() {
        use rand::Rng;
        let mut w = world_3x3();
        let mut rng = tensor_core::rng::seeded_rng(0, "walk", 0);
        for _ in 0..100 {
            let a = rng.gen_range(0..NUM_ACTIONS);
            w.step_index(a).unwrap();
            assert!(w.geometry.is_free(w.agent));
        }
    }

    #[test]
    fn carried_object_is_not_rendered() {
        let mut w = world_3x3();
        w.place_object(1, (0, 0)).unwrap();
        let before = w.observe();
        assert_eq!(before.grid[3][0][0], 1);
        w.step(Action::Interact).unwrap();
        let after = w.observe();
        assert!(after.grid[3].iter().flatten().all(|&v| v == 0));
    }

    #[test]
    fn video_rendering_inverts_exactly() {
        let mut w = world_3x3();
        w.place_object(0, (2, 1)).unwrap();
        w.agent = (0, 2);
        let robot = w.observe();
        let mut wv = w.clone();
        wv.style = Domain::Video;
        let video = wv.observe();
        assert_ne!(robot.grid, video.grid);
        let recovered = video_to_robot_grid(&video).unwrap();
        assert_eq!(recovered, robot.grid);
    }

    #[test]
    fn state_index_roundtrips_through_both_domains() {
        let w = world_3x3();
        let geom = w.geometry.clone();
        for (i, &cell) in geom.free_cells().iter().enumerate() {
            for style in [Domain::Robot, Domain::Video] {
                let mut wi = w.clone();
                wi.agent = cell;
                wi.style = style;
                let obs = wi.observe();
                assert_eq!(GridWorld::state_index_of(&geom, &obs).unwrap(), i);
            }
        }
    }

    #[test]
    fn one_hot_channels_sum_to_entity_counts() {
        let mut w = world_3x3();
        w.place_object(0, (2, 2)).unwrap();
        let obs = w.observe();
        let sums: Vec<usize> = obs
            .grid
            .iter()
            .map(|c| c.iter().flatten().map(|&v| v as usize).sum())
            .collect();
        assert_eq!(sums, vec![1, 1, 1, 0]); // agent, wall, object class 0, class 1 empty
    }
}
