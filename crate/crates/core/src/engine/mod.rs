//! Deterministic MiniDungeons 2 rules engine.
//!
//! The engine is state-in, state-out: [`apply_action`] never mutates its input
//! and every transition reports the mechanic events it triggered, in the order
//! they were resolved.

mod events;
mod hash;
mod level;
pub mod los;
mod rules;
mod state;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use events::{MechanicEvent, MechanicKind, MECHANIC_COUNT};
pub use hash::Fnv64;
pub use level::{load_map, ItemKind, Level, MapError, TileKind};
pub use rules::{apply_action, is_terminal, legal_actions, line_of_sight};
pub(crate) use rules::{push_moves, push_throws};
pub use state::{
    GameState, Javelin, MonsterKind, MonsterState, Outcome, Pickup, StateSnapshot, HERO_MAX_HP, MINITAUR_STUN_TURNS,
};

/// Tile coordinate. `x` is the column, `y` the row; ordering is row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn step(self, dir: Direction) -> Pos {
        let (dx, dy) = dir.delta();
        Pos::new(self.x + dx, self.y + dy)
    }

    pub fn manhattan(self, other: Pos) -> i32 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    pub fn euclidean_sq(self, other: Pos) -> i32 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

impl Ord for Pos {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Pos {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Cardinal direction. Declaration order is the legal-action order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    N,
    S,
    E,
    W,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::N, Direction::S, Direction::E, Direction::W];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::N => (0, -1),
            Direction::S => (0, 1),
            Direction::E => (1, 0),
            Direction::W => (-1, 0),
        }
    }
}

/// A hero action for one turn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Move(Direction),
    ThrowJavelin(Pos),
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Move(d) => write!(f, "move {d:?}"),
            Action::ThrowJavelin(p) => write!(f, "throw {p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("illegal action {action} at turn {turn}")]
    IllegalAction { action: Action, turn: u32 },
    #[error("state is terminal ({0:?})")]
    TerminalState(Outcome),
}
