//! Cross-shaped gridworld with teleports between adjacent arm tips.
//!
//! The walkable cells are the middle row and the middle column of a 5x5
//! grid. Moving off the cross leaves the agent in place, except at the four
//! arm tips where the two moves pointing "around" the cross jump to the
//! neighbouring tip:
//!
//! ```text
//!   N:(0,2)  Right -> E   Left -> W
//!   E:(2,4)  Up    -> N   Down -> S
//!   S:(4,2)  Right -> E   Left -> W
//!   W:(2,0)  Up    -> N   Down -> S
//! ```
//!
//! Entering the goal gives reward 1 and ends the episode; every other
//! transition gives 0. Episodes time out after 20 steps.

use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;

use crate::env::{Action, ContextualEnv, EnvState, Observation, Position, Rgb, Task, TaskId, Transition};
use crate::{Error, Result};

pub const GRID_SIZE: usize = 5;
pub const CHANNELS: usize = 3;
pub const OBSERVATION_LEN: usize = CHANNELS * GRID_SIZE * GRID_SIZE;

pub const NORTH: Position = Position::new(0, 2);
pub const EAST: Position = Position::new(2, 4);
pub const SOUTH: Position = Position::new(4, 2);
pub const WEST: Position = Position::new(2, 0);
pub const CENTRE: Position = Position::new(2, 2);

pub const GOAL_COLOR: Rgb = Rgb([0.0, 0.5, 0.0]);
pub const AGENT_COLOR: Rgb = Rgb([0.5, 0.0, 0.0]);

pub const DEFAULT_TIMEOUT: u32 = 20;

/// Training background colours, assigned to N, E, S, W in that order.
pub const TRAINING_COLORS: [Rgb; 4] = [
    Rgb([0.0, 0.0, 1.0]),
    Rgb([0.0, 1.0, 0.0]),
    Rgb([1.0, 0.0, 0.0]),
    Rgb([1.0, 0.0, 1.0]),
];

pub const ENDPOINTS: [Position; 4] = [NORTH, EAST, SOUTH, WEST];

pub fn is_walkable(position: Position) -> bool {
    position.row < GRID_SIZE
        && position.col < GRID_SIZE
        && (position.row == GRID_SIZE / 2 || position.col == GRID_SIZE / 2)
}

pub fn walkable_cells() -> Vec<Position> {
    (0..GRID_SIZE)
        .flat_map(|row| (0..GRID_SIZE).map(move |col| Position::new(row, col)))
        .filter(|&p| is_walkable(p))
        .collect()
}

fn teleport(position: Position, action: Action) -> Option<Position> {
    match (position, action) {
        (NORTH, Action::Right) | (SOUTH, Action::Right) => Some(EAST),
        (NORTH, Action::Left) | (SOUTH, Action::Left) => Some(WEST),
        (EAST, Action::Up) | (WEST, Action::Up) => Some(NORTH),
        (EAST, Action::Down) | (WEST, Action::Down) => Some(SOUTH),
        _ => None,
    }
}

/// Pure movement rule on the cross, ignoring goal and timeout.
pub fn move_on_cross(position: Position, action: Action) -> Position {
    match position.shifted(action, GRID_SIZE, GRID_SIZE) {
        Some(next) if is_walkable(next) => next,
        _ => teleport(position, action).unwrap_or(position),
    }
}

pub fn training_tasks() -> Vec<Task> {
    ENDPOINTS
        .iter()
        .zip(TRAINING_COLORS)
        .enumerate()
        .map(|(id, (&start, color))| Task { id, color, start })
        .collect()
}

/// White-background copies of the training starts; ids follow the training
/// ids.
pub fn testing_tasks() -> Vec<Task> {
    ENDPOINTS
        .iter()
        .enumerate()
        .map(|(i, &start)| Task { id: ENDPOINTS.len() + i, color: Rgb::WHITE, start })
        .collect()
}

/// Index of a distinct background colour within an environment's task list.
pub type ContextId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct CrossConfig {
    pub goal: Position,
    pub timeout: u32,
    pub train_tasks: Vec<Task>,
    pub test_tasks: Vec<Task>,
}

impl Default for CrossConfig {
    fn default() -> Self {
        Self {
            goal: CENTRE,
            timeout: DEFAULT_TIMEOUT,
            train_tasks: training_tasks(),
            test_tasks: testing_tasks(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskSpec {
    id: Option<TaskId>,
    color: [f64; 3],
    start: [usize; 2],
}

/// On-disk task-set description. Every key is optional; missing keys fall
/// back to the bundled defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossConfigFile {
    goal: Option<[usize; 2]>,
    timeout: Option<u32>,
    train_tasks: Option<Vec<TaskSpec>>,
    test_tasks: Option<Vec<TaskSpec>>,
}

impl CrossConfigFile {
    pub fn resolve(self) -> Result<CrossConfig> {
        let defaults = CrossConfig::default();
        let mut next_id = 0;
        let mut convert = |specs: Option<Vec<TaskSpec>>, fallback: Vec<Task>| -> Vec<Task> {
            match specs {
                None => {
                    next_id += fallback.len();
                    fallback
                }
                Some(specs) => specs
                    .into_iter()
                    .map(|s| {
                        let id = s.id.unwrap_or(next_id);
                        next_id = id + 1;
                        Task { id, color: Rgb(s.color), start: Position::new(s.start[0], s.start[1]) }
                    })
                    .collect(),
            }
        };
        let train_tasks = convert(self.train_tasks, defaults.train_tasks);
        let test_tasks = convert(self.test_tasks, defaults.test_tasks);
        let config = CrossConfig {
            goal: self.goal.map_or(defaults.goal, |[r, c]| Position::new(r, c)),
            timeout: self.timeout.unwrap_or(defaults.timeout),
            train_tasks,
            test_tasks,
        };
        config.validate()?;
        Ok(config)
    }
}

impl CrossConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: CrossConfigFile = toml::from_str(text)?;
        file.resolve()
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::ConfigFile { path: path.to_owned(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !is_walkable(self.goal) {
            return Err(Error::Config(format!("goal {} is not on the cross", self.goal)));
        }
        if self.timeout == 0 {
            return Err(Error::Config("timeout must be positive".into()));
        }
        if self.train_tasks.is_empty() {
            return Err(Error::Config("at least one training task is required".into()));
        }
        let mut seen = HashMap::new();
        for task in self.train_tasks.iter().chain(&self.test_tasks) {
            if seen.insert(task.id, ()).is_some() {
                return Err(Error::Config(format!("duplicate task id {}", task.id)));
            }
            if !is_walkable(task.start) || task.start == self.goal {
                return Err(Error::Config(format!(
                    "task {} starts at {}, which is not a walkable non-goal cell",
                    task.id, task.start
                )));
            }
            if task.color.0.iter().any(|c| !(0.0..=1.0).contains(c)) {
                return Err(Error::Config(format!("task {} colour {} outside [0,1]", task.id, task.color)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CrossEnv {
    config: CrossConfig,
    contexts: Vec<Rgb>,
}

impl CrossEnv {
    pub fn new(config: CrossConfig) -> Result<Self> {
        config.validate()?;
        let mut contexts: Vec<Rgb> = Vec::new();
        for task in config.train_tasks.iter().chain(&config.test_tasks) {
            if !contexts.iter().any(|c| c.key() == task.color.key()) {
                contexts.push(task.color);
            }
        }
        Ok(Self { config, contexts })
    }

    pub fn config(&self) -> &CrossConfig {
        &self.config
    }

    pub fn training_tasks(&self) -> &[Task] {
        &self.config.train_tasks
    }

    pub fn testing_tasks(&self) -> &[Task] {
        &self.config.test_tasks
    }

    pub fn task(&self, id: TaskId) -> Option<&Task> {
        self.config.train_tasks.iter().chain(&self.config.test_tasks).find(|t| t.id == id)
    }

    /// Context index of a task's background, or `None` for a colour no
    /// configured task uses.
    pub fn context_of(&self, task: &Task) -> Option<ContextId> {
        self.contexts.iter().position(|c| c.key() == task.color.key())
    }

    pub fn context_color(&self, context: ContextId) -> Option<Rgb> {
        self.contexts.get(context).copied()
    }

    pub fn num_contexts(&self) -> usize {
        self.contexts.len()
    }
}

impl ContextualEnv for CrossEnv {
    fn num_actions(&self) -> usize {
        Action::COUNT
    }

    fn observation_len(&self) -> usize {
        OBSERVATION_LEN
    }

    fn timeout(&self) -> u32 {
        self.config.timeout
    }

    fn reset(&self, task: &Task) -> Result<EnvState> {
        match self.task(task.id) {
            Some(known) if known == task => Ok(EnvState {
                position: task.start,
                task: *task,
                steps_elapsed: 0,
                terminal: false,
            }),
            _ => Err(Error::Config(format!("unknown task id {}", task.id))),
        }
    }

    fn step(&self, state: &EnvState, action: Action) -> Result<Transition> {
        if state.terminal {
            return Err(Error::Usage("step called on a terminal state".into()));
        }
        if state.steps_elapsed >= self.config.timeout {
            return Err(Error::Usage("step called after the episode timed out".into()));
        }
        let position = move_on_cross(state.position, action);
        let reached_goal = self.is_goal(position);
        let steps_elapsed = state.steps_elapsed + 1;
        let truncated = !reached_goal && steps_elapsed >= self.config.timeout;
        let next_state = EnvState { position, task: state.task, steps_elapsed, terminal: reached_goal };
        Ok(Transition {
            state: *state,
            action,
            reward: if reached_goal { 1.0 } else { 0.0 },
            next_state,
            done: reached_goal || truncated,
            truncated,
        })
    }

    fn render(&self, state: &EnvState) -> Result<Observation> {
        if state.terminal {
            return Err(Error::Usage("terminal states have no observation".into()));
        }
        let mut obs = Observation::filled(CHANNELS, GRID_SIZE, GRID_SIZE, 0.0);
        for (channel, &value) in state.task.color.0.iter().enumerate() {
            for row in 0..GRID_SIZE {
                for col in 0..GRID_SIZE {
                    obs.set(channel, row, col, value);
                }
            }
        }
        let goal = self.config.goal;
        for (channel, &value) in GOAL_COLOR.0.iter().enumerate() {
            obs.set(channel, goal.row, goal.col, value);
        }
        let agent = state.position;
        for (channel, &value) in AGENT_COLOR.0.iter().enumerate() {
            obs.set(channel, agent.row, agent.col, value);
        }
        Ok(obs)
    }

    fn is_goal(&self, position: Position) -> bool {
        position == self.config.goal
    }
}
