//! Contextual-MDP primitives.
//!
//! A state is an underlying grid position paired with a task (the context).
//! The task is drawn when an episode starts and never changes afterwards; in
//! this crate it only affects the start cell and the background colour of
//! the observation, never the dynamics or the reward.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type TaskId = usize;

/// Grid coordinate, `row` grows downwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Position {
    pub row: usize,
    pub col: usize,
}

impl Position {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// Neighbour one cell away in `action`'s direction, if it stays on a
    /// `height` x `width` grid.
    pub fn shifted(self, action: Action, height: usize, width: usize) -> Option<Position> {
        let (dr, dc) = action.delta();
        let row = self.row.checked_add_signed(dr)?;
        let col = self.col.checked_add_signed(dc)?;
        (row < height && col < width).then_some(Position { row, col })
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// Background colour, each channel in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rgb(pub [f64; 3]);

impl Rgb {
    pub const WHITE: Rgb = Rgb([1.0, 1.0, 1.0]);

    /// Bit pattern of the channels, usable as an exact hash key.
    pub fn key(&self) -> [u64; 3] {
        self.0.map(f64::to_bits)
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [r, g, b] = self.0;
        write!(f, "({r},{g},{b})")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    pub color: Rgb,
    pub start: Position,
}

/// The four cardinal moves. `Up` decreases the row, `Left` decreases the
/// column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Result<Action> {
        Action::ALL
            .get(index)
            .copied()
            .ok_or_else(|| Error::Usage(format!("action index {index} out of range 0..4")))
    }

    pub fn delta(self) -> (isize, isize) {
        match self {
            Action::Up => (-1, 0),
            Action::Down => (1, 0),
            Action::Left => (0, -1),
            Action::Right => (0, 1),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Up => "Up",
            Action::Down => "Down",
            Action::Left => "Left",
            Action::Right => "Right",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvState {
    pub position: Position,
    pub task: Task,
    pub steps_elapsed: u32,
    /// Set once the goal has been entered.
    pub terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: EnvState,
    pub action: Action,
    pub reward: f64,
    pub next_state: EnvState,
    /// Episode is over, either by reaching the goal or by timing out.
    pub done: bool,
    /// Episode was cut by the timeout without reaching the goal.
    pub truncated: bool,
}

impl Transition {
    /// Ended in a true terminal state (no bootstrapping past it).
    pub fn terminated(&self) -> bool {
        self.done && !self.truncated
    }
}

/// Channel-major image fed to the networks.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Observation {
    pub fn filled(channels: usize, height: usize, width: usize, value: f64) -> Self {
        Self { channels, height, width, data: vec![value; channels * height * width] }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        let expected = channels * height * width;
        if data.len() != expected {
            return Err(Error::Shape { expected, actual: data.len() });
        }
        Ok(Self { channels, height, width, data })
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.channels, self.height, self.width]
    }

    pub fn get(&self, channel: usize, row: usize, col: usize) -> f64 {
        self.data[self.index(channel, row, col)]
    }

    pub fn set(&mut self, channel: usize, row: usize, col: usize, value: f64) {
        let i = self.index(channel, row, col);
        self.data[i] = value;
    }

    /// Flattened view, channel-major then row-major.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    fn index(&self, channel: usize, row: usize, col: usize) -> usize {
        debug_assert!(channel < self.channels && row < self.height && col < self.width);
        (channel * self.height + row) * self.width + col
    }
}

/// Episodic environment whose state is passed in and out explicitly, so one
/// immutable environment value can drive any number of parallel episodes.
pub trait ContextualEnv {
    fn num_actions(&self) -> usize;

    /// Length of the flattened observation.
    fn observation_len(&self) -> usize;

    /// Episode step budget.
    fn timeout(&self) -> u32;

    /// Start state for `task`; errors if the task is not configured.
    fn reset(&self, task: &Task) -> Result<EnvState>;

    /// Applies `action`; errors on terminal or timed-out states.
    fn step(&self, state: &EnvState, action: Action) -> Result<Transition>;

    fn render(&self, state: &EnvState) -> Result<Observation>;

    fn is_goal(&self, position: Position) -> bool;
}
