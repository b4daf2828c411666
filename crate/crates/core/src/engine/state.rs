use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::hash::Fnv64;
use super::level::{ItemKind, Level};
use super::Pos;

pub const HERO_MAX_HP: u8 = 10;
pub const MINITAUR_STUN_TURNS: u8 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonsterKind {
    Goblin,
    GoblinWizard,
    Blob,
    Ogre,
    Minitaur,
}

impl MonsterKind {
    /// Starting hit points. The minitaur is immortal and carries 0.
    pub fn initial_hp(self) -> u8 {
        match self {
            MonsterKind::Goblin | MonsterKind::GoblinWizard | MonsterKind::Blob => 1,
            MonsterKind::Ogre => 2,
            MonsterKind::Minitaur => 0,
        }
    }

    pub fn is_immortal(self) -> bool {
        self == MonsterKind::Minitaur
    }

    fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MonsterState {
    pub kind: MonsterKind,
    pub pos: Pos,
    /// Remaining hit points; unused for the minitaur.
    pub hp: u8,
    /// Blob tier 1..=3; 1 for every other kind.
    pub blob_level: u8,
    /// Remaining stunned monster phases (minitaur only).
    pub stun_turns: u8,
    pub alive: bool,
}

impl MonsterState {
    pub fn new(kind: MonsterKind, pos: Pos) -> Self {
        Self { kind, pos, hp: kind.initial_hp(), blob_level: 1, stun_turns: 0, alive: true }
    }

    pub fn is_stunned(&self) -> bool {
        self.stun_turns > 0
    }

    /// Damage dealt to whatever this monster collides with.
    pub fn contact_damage(&self) -> u8 {
        match self.kind {
            MonsterKind::Goblin => 1,
            MonsterKind::GoblinWizard => 0,
            MonsterKind::Blob => self.blob_level,
            MonsterKind::Ogre => 2,
            MonsterKind::Minitaur => {
                if self.is_stunned() {
                    0
                } else {
                    1
                }
            }
        }
    }

    /// Whether the hero may share the tile with this monster.
    pub fn is_passable(&self) -> bool {
        !self.alive || (self.kind == MonsterKind::Minitaur && self.is_stunned())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Javelin {
    Held,
    OnGround(Pos),
}

/// Consumable items whose presence changes during play. Traps and portals
/// are permanent and live on the [`Level`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pickup {
    Treasure,
    Potion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ongoing,
    Won,
    Dead,
}

/// Full world snapshot. Cloning is cheap: the level is shared.
#[derive(Clone, Debug)]
pub struct GameState {
    pub(crate) level: Arc<Level>,
    pub(crate) hero: Pos,
    pub(crate) hero_hp: u8,
    pub(crate) score: u32,
    pub(crate) javelin: Javelin,
    pub(crate) monsters: Vec<MonsterState>,
    /// Sorted row-major by position.
    pub(crate) pickups: Vec<(Pos, Pickup)>,
    pub(crate) turn: u32,
    pub(crate) outcome: Outcome,
    pub(crate) ogre_treasure: u32,
}

impl PartialEq for GameState {
    fn eq(&self, other: &Self) -> bool {
        self.level.fingerprint() == other.level.fingerprint() && self.snapshot() == other.snapshot()
    }
}

/// Serializable form of the dynamic part of a [`GameState`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub hero: Pos,
    pub hero_hp: u8,
    pub score: u32,
    pub javelin: Javelin,
    pub monsters: Vec<MonsterState>,
    pub pickups: Vec<(Pos, Pickup)>,
    pub turn: u32,
    pub outcome: Outcome,
    pub ogre_treasure: u32,
}

impl GameState {
    /// Fresh state at the start of the level.
    pub fn new(level: Arc<Level>) -> Self {
        let monsters = level.monsters().iter().map(|(k, p)| MonsterState::new(*k, *p)).collect();
        let mut pickups: Vec<(Pos, Pickup)> = level
            .items()
            .iter()
            .filter_map(|(kind, p)| match kind {
                ItemKind::Treasure => Some((*p, Pickup::Treasure)),
                ItemKind::Potion => Some((*p, Pickup::Potion)),
                _ => None,
            })
            .collect();
        pickups.sort_by_key(|(p, _)| *p);
        Self {
            hero: level.hero_start(),
            level,
            hero_hp: HERO_MAX_HP,
            score: 0,
            javelin: Javelin::Held,
            monsters,
            pickups,
            turn: 0,
            outcome: Outcome::Ongoing,
            ogre_treasure: 0,
        }
    }

    pub fn from_snapshot(level: Arc<Level>, snap: StateSnapshot) -> Self {
        let mut pickups = snap.pickups;
        pickups.sort_by_key(|(p, _)| *p);
        Self {
            level,
            hero: snap.hero,
            hero_hp: snap.hero_hp,
            score: snap.score,
            javelin: snap.javelin,
            monsters: snap.monsters,
            pickups,
            turn: snap.turn,
            outcome: snap.outcome,
            ogre_treasure: snap.ogre_treasure,
        }
    }

    pub fn snapshot(&self) -> StateSnapshot {
        StateSnapshot {
            hero: self.hero,
            hero_hp: self.hero_hp,
            score: self.score,
            javelin: self.javelin,
            monsters: self.monsters.clone(),
            pickups: self.pickups.clone(),
            turn: self.turn,
            outcome: self.outcome,
            ogre_treasure: self.ogre_treasure,
        }
    }

    pub fn level(&self) -> &Arc<Level> {
        &self.level
    }

    pub fn hero_pos(&self) -> Pos {
        self.hero
    }

    pub fn hero_hp(&self) -> u8 {
        self.hero_hp
    }

    pub fn treasure_score(&self) -> u32 {
        self.score
    }

    pub fn javelin(&self) -> Javelin {
        self.javelin
    }

    pub fn monsters(&self) -> &[MonsterState] {
        &self.monsters
    }

    pub fn living_monsters(&self) -> impl Iterator<Item = &MonsterState> {
        self.monsters.iter().filter(|m| m.alive)
    }

    pub fn pickups(&self) -> &[(Pos, Pickup)] {
        &self.pickups
    }

    pub fn pickup_at(&self, p: Pos) -> Option<Pickup> {
        self.pickups.binary_search_by(|(q, _)| q.cmp(&p)).ok().map(|i| self.pickups[i].1)
    }

    pub fn treasures_remaining(&self) -> usize {
        self.pickups.iter().filter(|(_, k)| *k == Pickup::Treasure).count()
    }

    /// Treasures eaten by ogres so far.
    pub fn treasures_eaten(&self) -> u32 {
        self.ogre_treasure
    }

    pub fn turn(&self) -> u32 {
        self.turn
    }

    pub fn outcome(&self) -> Outcome {
        self.outcome
    }

    /// Living monster occupying `p` that blocks movement, if any. A stunned
    /// minitaur is reported too; callers decide whether it blocks.
    pub fn monster_at(&self, p: Pos) -> Option<usize> {
        self.monsters.iter().position(|m| m.alive && m.pos == p)
    }

    pub(crate) fn remove_pickup(&mut self, p: Pos) -> Option<Pickup> {
        let i = self.pickups.binary_search_by(|(q, _)| q.cmp(&p)).ok()?;
        Some(self.pickups.remove(i).1)
    }

    fn write_canonical(&self, h: &mut Fnv64, include_turn: bool) {
        h.write_u64(self.level.fingerprint());
        h.write_i32(self.hero.x);
        h.write_i32(self.hero.y);
        h.write_u8(self.hero_hp);
        h.write_u32(self.score);
        match self.javelin {
            Javelin::Held => h.write_u8(0),
            Javelin::OnGround(p) => {
                h.write_u8(1);
                h.write_i32(p.x);
                h.write_i32(p.y);
            }
        }
        h.write_u32(self.monsters.len() as u32);
        for m in &self.monsters {
            h.write_u8(m.kind.code());
            h.write_i32(m.pos.x);
            h.write_i32(m.pos.y);
            h.write_u8(m.hp);
            h.write_u8(m.blob_level);
            h.write_u8(m.stun_turns);
            h.write_u8(u8::from(m.alive));
        }
        h.write_u32(self.pickups.len() as u32);
        for (p, k) in &self.pickups {
            h.write_i32(p.x);
            h.write_i32(p.y);
            h.write_u8(*k as u8);
        }
        if include_turn {
            h.write_u32(self.turn);
        }
        h.write_u8(self.outcome as u8);
        h.write_u32(self.ogre_treasure);
    }

    /// Stable 64-bit digest of the canonical state encoding.
    pub fn state_hash(&self) -> u64 {
        let mut h = Fnv64::new();
        self.write_canonical(&mut h, true);
        h.finish()
    }

    /// Digest that ignores the turn counter: two states with equal keys
    /// behave identically from here on.
    pub fn position_key(&self) -> u64 {
        let mut h = Fnv64::new();
        self.write_canonical(&mut h, false);
        h.finish()
    }
}
