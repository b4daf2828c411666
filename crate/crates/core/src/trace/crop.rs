use serde::{Deserialize, Serialize};

use super::{Playtrace, TraceError};
use crate::engine::{GameState, ItemKind, Javelin, MonsterKind, Pickup, Pos, TileKind, HERO_MAX_HP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    Wall,
    Floor,
    Exit,
    Treasure,
    Potion,
    Trap,
    Portal,
    Goblin,
    Wizard,
    Blob,
    Ogre,
    Minitaur,
    JavelinOnGround,
}

impl Channel {
    pub const ALL: [Channel; CHANNEL_COUNT] = [
        Channel::Wall,
        Channel::Floor,
        Channel::Exit,
        Channel::Treasure,
        Channel::Potion,
        Channel::Trap,
        Channel::Portal,
        Channel::Goblin,
        Channel::Wizard,
        Channel::Blob,
        Channel::Ogre,
        Channel::Minitaur,
        Channel::JavelinOnGround,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    fn for_monster(kind: MonsterKind) -> Channel {
        match kind {
            MonsterKind::Goblin => Channel::Goblin,
            MonsterKind::GoblinWizard => Channel::Wizard,
            MonsterKind::Blob => Channel::Blob,
            MonsterKind::Ogre => Channel::Ogre,
            MonsterKind::Minitaur => Channel::Minitaur,
        }
    }
}

pub const CHANNEL_COUNT: usize = 13;
pub const WINDOW_CELLS: usize = 9;
/// Window values plus the hero hit points.
pub const CROP_INPUT_SIZE: usize = WINDOW_CELLS * CHANNEL_COUNT + 1;

/// Observation for one turn. `window[cell * CHANNEL_COUNT + channel]`, with
/// cells numbered row-major from the top-left of the 3×3 window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CropStep {
    pub window: Vec<f64>,
    pub hero_hp: f64,
}

impl CropStep {
    pub fn get(&self, dx: i32, dy: i32, channel: Channel) -> f64 {
        self.window[cell(dx, dy) * CHANNEL_COUNT + channel.index()]
    }

    /// Network input: window followed by hit points.
    pub fn input(&self) -> Vec<f64> {
        let mut v = self.window.clone();
        v.push(self.hero_hp);
        v
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CroppedSequence {
    pub steps: Vec<CropStep>,
}

impl CroppedSequence {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn inputs(&self) -> Vec<Vec<f64>> {
        self.steps.iter().map(CropStep::input).collect()
    }
}

fn cell(dx: i32, dy: i32) -> usize {
    ((dy + 1) * 3 + (dx + 1)) as usize
}

/// The 3×3 window around the hero. Cells outside the map read as wall.
pub fn crop_window(state: &GameState) -> CropStep {
    let level = state.level();
    let hero = state.hero_pos();
    let mut window = vec![0.0; WINDOW_CELLS * CHANNEL_COUNT];
    let mut set = |p: Pos, ch: Channel, v: f64| {
        let (dx, dy) = (p.x - hero.x, p.y - hero.y);
        if dx.abs() <= 1 && dy.abs() <= 1 {
            window[cell(dx, dy) * CHANNEL_COUNT + ch.index()] = v;
        }
    };
    for dy in -1..=1 {
        for dx in -1..=1 {
            let p = Pos::new(hero.x + dx, hero.y + dy);
            let terrain = if p == level.exit() {
                Channel::Exit
            } else if level.tile(p) == TileKind::Wall {
                Channel::Wall
            } else {
                Channel::Floor
            };
            set(p, terrain, 1.0);
        }
    }
    for (kind, p) in level.items() {
        match kind {
            ItemKind::Trap => set(*p, Channel::Trap, 1.0),
            ItemKind::Portal(_) => set(*p, Channel::Portal, 1.0),
            ItemKind::Treasure | ItemKind::Potion => {}
        }
    }
    for (p, kind) in state.pickups() {
        let ch = match kind {
            Pickup::Treasure => Channel::Treasure,
            Pickup::Potion => Channel::Potion,
        };
        set(*p, ch, 1.0);
    }
    for m in state.living_monsters() {
        let v = if m.kind == MonsterKind::Blob { f64::from(m.blob_level) / 3.0 } else { 1.0 };
        set(m.pos, Channel::for_monster(m.kind), v);
    }
    if let Javelin::OnGround(p) = state.javelin() {
        set(p, Channel::JavelinOnGround, 1.0);
    }
    CropStep { window, hero_hp: f64::from(state.hero_hp()) / f64::from(HERO_MAX_HP) }
}

/// One window per turn, each taken before that turn's action.
pub fn crop_sequence(trace: &Playtrace) -> Result<CroppedSequence, TraceError> {
    let states = trace.replay()?;
    Ok(CroppedSequence { steps: states[..trace.len()].iter().map(crop_window).collect() })
}
