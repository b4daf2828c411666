use persona_core::engine::{
    legal_actions, Action, GameState, ItemKind, Javelin, MechanicEvent, MonsterKind, Outcome, Pickup, Pos, TileKind,
};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Finished,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonsterView {
    pub kind: MonsterKind,
    pub pos: Pos,
    pub hp: u8,
    pub blob_level: u8,
    pub stunned: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub session: String,
    pub map: String,
    pub status: SessionStatus,
    pub turn: u32,
    pub hero: Pos,
    pub hero_hp: u8,
    pub score: u32,
    pub outcome: Outcome,
    pub javelin: Javelin,
    /// One string per row, using the map file glyphs, plus `j` for a
    /// javelin on the ground. Entities are drawn over terrain.
    pub glyphs: Vec<String>,
    pub monsters: Vec<MonsterView>,
    pub legal_actions: Vec<Action>,
}

fn monster_glyph(kind: MonsterKind) -> char {
    match kind {
        MonsterKind::Goblin => 'g',
        MonsterKind::GoblinWizard => 'w',
        MonsterKind::Blob => 'b',
        MonsterKind::Ogre => 'o',
        MonsterKind::Minitaur => 'm',
    }
}

pub fn render_glyphs(state: &GameState) -> Vec<String> {
    let level = state.level();
    let mut grid: Vec<Vec<char>> = (0..level.height())
        .map(|y| {
            (0..level.width())
                .map(|x| if level.tile(Pos::new(x as i32, y as i32)) == TileKind::Wall { '#' } else { '.' })
                .collect()
        })
        .collect();
    let mut put = |p: Pos, c: char| grid[p.y as usize][p.x as usize] = c;
    put(level.exit(), 'S');
    for (kind, p) in level.items() {
        match kind {
            ItemKind::Trap => put(*p, '^'),
            ItemKind::Portal(id) => put(*p, char::from(b'0' + id)),
            ItemKind::Treasure | ItemKind::Potion => {}
        }
    }
    for (p, kind) in state.pickups() {
        put(*p, if *kind == Pickup::Treasure { '$' } else { '+' });
    }
    if let Javelin::OnGround(p) = state.javelin() {
        put(p, 'j');
    }
    for m in state.living_monsters() {
        put(m.pos, monster_glyph(m.kind));
    }
    put(state.hero_pos(), '@');
    grid.into_iter().map(|r| r.into_iter().collect()).collect()
}

pub fn state_view(session: &str, status: SessionStatus, state: &GameState) -> StateView {
    StateView {
        session: session.to_string(),
        map: state.level().name().to_string(),
        status,
        turn: state.turn(),
        hero: state.hero_pos(),
        hero_hp: state.hero_hp(),
        score: state.treasure_score(),
        outcome: state.outcome(),
        javelin: state.javelin(),
        glyphs: render_glyphs(state),
        monsters: state
            .living_monsters()
            .map(|m| MonsterView { kind: m.kind, pos: m.pos, hp: m.hp, blob_level: m.blob_level, stunned: m.is_stunned() })
            .collect(),
        legal_actions: if status == SessionStatus::Active { legal_actions(state).unwrap_or_default() } else { Vec::new() },
    }
}

/// Probabilities in label order (R, TC, MK).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionSnapshot {
    pub probabilities: [f64; 3],
    pub based_on_turns: usize,
    pub model_id: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionResponse {
    pub state: StateView,
    pub events: Vec<MechanicEvent>,
    pub prediction: Option<PredictionSnapshot>,
}
