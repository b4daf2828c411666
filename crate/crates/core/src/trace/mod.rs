//! Playtraces: recording, replay, storage and the two learning
//! representations (mechanic frequencies and cropped state sequences).

mod crop;
mod features;
mod io;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::engine::{
    apply_action, load_map, Action, EngineError, GameState, Level, MapError, MechanicEvent, MechanicKind, Outcome,
    Pos, StateSnapshot,
};
use crate::personas::PersonaKind;

pub use crop::{crop_sequence, crop_window, Channel, CroppedSequence, CropStep, CHANNEL_COUNT, CROP_INPUT_SIZE, WINDOW_CELLS};
pub use features::{
    mechanic_frequencies, write_features_csv, FeatureError, FeatureRow, FeatureVector, Normalizer, FEATURE_COLUMNS,
};
pub use io::{append_traces, read_traces, read_traces_from, write_traces, write_traces_to, IoError};

pub const DEFAULT_MAX_TURNS: u32 = 500;

/// Supplies the hero's actions for [`record_episode`]. Returning `None`
/// abandons the episode.
pub trait ActionSource {
    fn next_action(&mut self, state: &GameState) -> Option<Action>;
}

/// Plays a fixed list of actions.
#[derive(Clone, Debug, Default)]
pub struct ScriptedActions {
    actions: Vec<Action>,
    next: usize,
}

impl ScriptedActions {
    pub fn new(actions: Vec<Action>) -> Self {
        Self { actions, next: 0 }
    }
}

impl ActionSource for ScriptedActions {
    fn next_action(&mut self, _state: &GameState) -> Option<Action> {
        let a = self.actions.get(self.next).copied();
        self.next += 1;
        a
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceSource {
    Synthetic(PersonaKind),
    Human(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceOutcome {
    Won,
    Dead,
    Abandoned,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub turn: u32,
    pub action: Action,
    pub hero_pos: Pos,
    pub hero_hp: u8,
    pub score: u32,
    pub events: Vec<MechanicEvent>,
    /// Digest of the state after the action resolved.
    #[serde(with = "hex_u64")]
    pub state_hash: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Playtrace {
    pub map_name: String,
    pub source: TraceSource,
    /// Map layout, so a trace replays without the original map file.
    pub map_text: String,
    pub initial_state: StateSnapshot,
    pub turns: Vec<TurnRecord>,
    pub outcome: TraceOutcome,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TraceError {
    #[error("trace map does not load: {0}")]
    Map(#[from] MapError),
    #[error("turn {turn}: {source}")]
    Engine { turn: usize, source: EngineError },
    #[error("replay diverged at turn {turn}: recorded {recorded:016x}, replayed {replayed:016x}")]
    ReplayMismatch { turn: usize, recorded: u64, replayed: u64 },
    #[error("trace invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RecordError {
    /// The provider asked for an illegal action. The partial trace is kept
    /// with an abandoned outcome.
    #[error("illegal action {action} requested at turn {turn}")]
    IllegalAction { action: Action, turn: u32, partial: Box<Playtrace> },
}

impl Playtrace {
    pub fn level(&self) -> Result<Arc<Level>, TraceError> {
        Ok(Arc::new(load_map(&self.map_name, &self.map_text)?))
    }

    pub fn initial_game_state(&self) -> Result<GameState, TraceError> {
        Ok(self.initial_with_level(self.level()?))
    }

    /// Rebuilds the initial state on an already loaded level.
    pub fn initial_with_level(&self, level: Arc<Level>) -> GameState {
        GameState::from_snapshot(level, self.initial_state.clone())
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    pub fn actions(&self) -> impl Iterator<Item = Action> + '_ {
        self.turns.iter().map(|t| t.action)
    }

    pub fn events(&self) -> impl Iterator<Item = &MechanicEvent> {
        self.turns.iter().flat_map(|t| t.events.iter())
    }

    pub fn count(&self, kind: MechanicKind) -> usize {
        self.events().filter(|e| e.kind == kind).count()
    }

    pub fn treasures_collected(&self) -> usize {
        self.count(MechanicKind::CollectTreasure)
    }

    pub fn monsters_killed(&self) -> usize {
        self.count(MechanicKind::EnemyKill)
    }

    pub fn persona(&self) -> Option<PersonaKind> {
        match self.source {
            TraceSource::Synthetic(p) => Some(p),
            TraceSource::Human(_) => None,
        }
    }

    /// Replays the trace and returns the pre-action state of every turn
    /// followed by the final state (`len() + 1` states). Fails at the
    /// first turn whose digest or events differ from the recording.
    pub fn replay(&self) -> Result<Vec<GameState>, TraceError> {
        self.replay_on(self.level()?)
    }

    pub fn replay_on(&self, level: Arc<Level>) -> Result<Vec<GameState>, TraceError> {
        let mut states = Vec::with_capacity(self.turns.len() + 1);
        let mut state = self.initial_with_level(level);
        for (i, rec) in self.turns.iter().enumerate() {
            let (next, events) =
                apply_action(&state, rec.action).map_err(|source| TraceError::Engine { turn: i, source })?;
            let replayed = next.state_hash();
            if replayed != rec.state_hash || events != rec.events {
                return Err(TraceError::ReplayMismatch { turn: i, recorded: rec.state_hash, replayed });
            }
            states.push(state);
            state = next;
        }
        states.push(state);
        Ok(states)
    }

    /// Replay closure plus the structural trace invariants.
    pub fn validate(&self) -> Result<(), TraceError> {
        let states = self.replay()?;
        let bad = |msg: String| Err(TraceError::Invariant(msg));
        for (i, rec) in self.turns.iter().enumerate() {
            if rec.turn as usize != i + self.initial_state.turn as usize {
                return bad(format!("turn {i} numbered {}", rec.turn));
            }
            let ends = rec.events.iter().filter(|e| e.kind == MechanicKind::EndTurn).count();
            if ends != 1 {
                return bad(format!("turn {i} has {ends} end-turn events"));
            }
            let after = &states[i + 1];
            if (rec.hero_pos, rec.hero_hp, rec.score) != (after.hero_pos(), after.hero_hp(), after.treasure_score()) {
                return bad(format!("turn {i} hero summary differs from replay"));
            }
        }
        let die = self.count(MechanicKind::Die);
        let stairs = self.count(MechanicKind::ReachStairs);
        if die > 1 || stairs > 1 || die + stairs > 1 {
            return bad(format!("{die} deaths and {stairs} exits"));
        }
        let first = &states[0];
        let last = states.last().expect("at least the initial state");
        let living = |s: &GameState| s.living_monsters().count();
        if self.monsters_killed() > living(first) - living(last) {
            return bad("more kills than monster deaths".into());
        }
        let expected = match last.outcome() {
            Outcome::Won => TraceOutcome::Won,
            Outcome::Dead => TraceOutcome::Dead,
            Outcome::Ongoing => TraceOutcome::Abandoned,
        };
        if expected != self.outcome {
            return bad(format!("outcome {:?} but final state is {:?}", self.outcome, last.outcome()));
        }
        Ok(())
    }
}

/// Incremental trace construction, used by [`record_episode`] and by live
/// sessions.
#[derive(Clone, Debug)]
pub struct TraceRecorder {
    trace: Playtrace,
    state: GameState,
}

impl TraceRecorder {
    pub fn new(state: GameState, source: TraceSource) -> Self {
        let level = state.level();
        let trace = Playtrace {
            map_name: level.name().to_string(),
            source,
            map_text: level.to_map_text(),
            initial_state: state.snapshot(),
            turns: Vec::new(),
            outcome: TraceOutcome::Abandoned,
        };
        Self { trace, state }
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn trace(&self) -> &Playtrace {
        &self.trace
    }

    /// Applies `action`. On error nothing changes.
    pub fn push(&mut self, action: Action) -> Result<&TurnRecord, EngineError> {
        let turn = self.state.turn();
        let (next, events) = apply_action(&self.state, action)?;
        self.trace.turns.push(TurnRecord {
            turn,
            action,
            hero_pos: next.hero_pos(),
            hero_hp: next.hero_hp(),
            score: next.treasure_score(),
            events,
            state_hash: next.state_hash(),
        });
        self.state = next;
        Ok(self.trace.turns.last().expect("just pushed"))
    }

    pub fn finish(mut self) -> Playtrace {
        self.trace.outcome = match self.state.outcome() {
            Outcome::Won => TraceOutcome::Won,
            Outcome::Dead => TraceOutcome::Dead,
            Outcome::Ongoing => TraceOutcome::Abandoned,
        };
        self.trace
    }
}

/// Plays one episode from the level start. Episodes still running after
/// `max_turns` actions, or whose provider gives up, end as abandoned.
pub fn record_episode(
    level: Arc<Level>,
    source: TraceSource,
    provider: &mut dyn ActionSource,
    max_turns: u32,
) -> Result<Playtrace, RecordError> {
    let mut rec = TraceRecorder::new(GameState::new(level), source);
    for _ in 0..max_turns {
        if rec.state().outcome() != Outcome::Ongoing {
            break;
        }
        let Some(action) = provider.next_action(rec.state()) else { break };
        if let Err(EngineError::IllegalAction { action, turn }) = rec.push(action) {
            return Err(RecordError::IllegalAction { action, turn, partial: Box::new(rec.finish()) });
        }
    }
    Ok(rec.finish())
}

mod hex_u64 {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{v:016x}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        let s = String::deserialize(d)?;
        u64::from_str_radix(&s, 16).map_err(D::Error::custom)
    }
}
