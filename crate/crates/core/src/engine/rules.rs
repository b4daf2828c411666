use super::state::{GameState, Javelin, MonsterKind, Outcome, Pickup, HERO_MAX_HP, MINITAUR_STUN_TURNS};
use super::{Action, Direction, EngineError, MechanicEvent, MechanicKind, Pos};

const WIZARD_RANGE_SQ: i32 = 25;
const MAX_BLOB_LEVEL: u8 = 3;

/// Wall-blocked supercover sight between two in-bounds tiles.
pub fn line_of_sight(state: &GameState, from: Pos, to: Pos) -> bool {
    state.level.has_line_of_sight(from, to)
}

pub fn is_terminal(state: &GameState) -> Outcome {
    state.outcome
}

/// Moves in N, S, E, W order followed by javelin throws in row-major target
/// order.
pub fn legal_actions(state: &GameState) -> Result<Vec<Action>, EngineError> {
    if state.outcome != Outcome::Ongoing {
        return Err(EngineError::TerminalState(state.outcome));
    }
    let mut actions = Vec::with_capacity(6);
    push_moves(state, &mut actions);
    push_throws(state, &mut actions);
    Ok(actions)
}

pub(crate) fn push_moves(state: &GameState, out: &mut Vec<Action>) {
    for dir in Direction::ALL {
        if state.level.is_floor(state.hero.step(dir)) {
            out.push(Action::Move(dir));
        }
    }
}

pub(crate) fn push_throws(state: &GameState, out: &mut Vec<Action>) {
    if state.javelin != Javelin::Held {
        return;
    }
    let start = out.len();
    for m in state.living_monsters() {
        if m.pos != state.hero && state.level.has_line_of_sight(state.hero, m.pos) {
            out.push(Action::ThrowJavelin(m.pos));
        }
    }
    out[start..].sort_by_key(|a| match a {
        Action::ThrowJavelin(p) => *p,
        Action::Move(_) => unreachable!(),
    });
}

fn is_legal(state: &GameState, action: Action) -> bool {
    match action {
        Action::Move(dir) => state.level.is_floor(state.hero.step(dir)),
        Action::ThrowJavelin(target) => {
            state.javelin == Javelin::Held
                && target != state.hero
                && state.level.in_bounds(target)
                && state.monster_at(target).is_some()
                && state.level.has_line_of_sight(state.hero, target)
        }
    }
}

/// Applies one hero action followed by the monster phase. The input state is
/// left untouched.
pub fn apply_action(state: &GameState, action: Action) -> Result<(GameState, Vec<MechanicEvent>), EngineError> {
    if state.outcome != Outcome::Ongoing {
        return Err(EngineError::TerminalState(state.outcome));
    }
    if !is_legal(state, action) {
        return Err(EngineError::IllegalAction { action, turn: state.turn });
    }
    let mut next = state.clone();
    let mut events = Vec::new();
    next.resolve(action, &mut events);
    Ok((next, events))
}

fn hit_mechanic(kind: MonsterKind) -> MechanicKind {
    match kind {
        MonsterKind::Goblin => MechanicKind::GoblinHit,
        MonsterKind::GoblinWizard => MechanicKind::GoblinWizardHit,
        MonsterKind::Blob => MechanicKind::BlobHit,
        MonsterKind::Ogre => MechanicKind::OgreHit,
        MonsterKind::Minitaur => MechanicKind::MinitaurHit,
    }
}

impl GameState {
    /// Resolves a legal action in place, appending events in resolution order.
    pub(crate) fn resolve(&mut self, action: Action, events: &mut Vec<MechanicEvent>) {
        match action {
            Action::Move(dir) => self.hero_move(dir, events),
            Action::ThrowJavelin(target) => self.hero_throw(target, events),
        }
        if self.hero_hp > 0 && self.hero != self.level.exit() {
            self.monster_phase(events);
        }
        self.emit(events, MechanicKind::EndTurn, self.hero);
        if self.hero_hp == 0 {
            self.outcome = Outcome::Dead;
            self.emit(events, MechanicKind::Die, self.hero);
        } else if self.hero == self.level.exit() {
            self.outcome = Outcome::Won;
            self.emit(events, MechanicKind::ReachStairs, self.hero);
        }
        self.turn += 1;
    }

    fn emit(&self, events: &mut Vec<MechanicEvent>, kind: MechanicKind, subject: Pos) {
        events.push(MechanicEvent { kind, turn: self.turn, subject });
    }

    fn hurt_hero(&mut self, damage: u8) {
        self.hero_hp = self.hero_hp.saturating_sub(damage);
    }

    /// One point of hero damage (melee or javelin). Returns whether it died.
    fn hero_hits_monster(&mut self, i: usize, events: &mut Vec<MechanicEvent>) -> bool {
        let m = &mut self.monsters[i];
        let pos = m.pos;
        let kind = m.kind;
        let killed = if kind.is_immortal() {
            m.stun_turns = MINITAUR_STUN_TURNS;
            false
        } else {
            m.hp = m.hp.saturating_sub(1);
            if m.hp == 0 {
                m.alive = false;
            }
            !m.alive
        };
        self.emit(events, hit_mechanic(kind), pos);
        if killed {
            self.emit(events, MechanicKind::EnemyKill, pos);
        }
        killed
    }

    fn hero_move(&mut self, dir: Direction, events: &mut Vec<MechanicEvent>) {
        let dest = self.hero.step(dir);
        let blocker = self.monsters.iter().position(|m| m.alive && m.pos == dest && !m.is_passable());
        if let Some(i) = blocker {
            let damage = self.monsters[i].contact_damage();
            let killed = self.hero_hits_monster(i, events);
            self.hurt_hero(damage);
            if !killed || self.hero_hp == 0 {
                return;
            }
        }
        self.enter_tile(dest, events);
    }

    fn pick_up_javelin(&mut self, p: Pos) {
        if self.javelin == Javelin::OnGround(p) {
            self.javelin = Javelin::Held;
        }
    }

    fn enter_tile(&mut self, p: Pos, events: &mut Vec<MechanicEvent>) {
        self.hero = p;
        self.pick_up_javelin(p);
        match self.remove_pickup(p) {
            Some(Pickup::Treasure) => {
                self.score += 1;
                self.emit(events, MechanicKind::CollectTreasure, p);
            }
            Some(Pickup::Potion) => {
                self.hero_hp = (self.hero_hp + 1).min(HERO_MAX_HP);
                self.emit(events, MechanicKind::ConsumePotion, p);
            }
            None => {}
        }
        if self.level.is_trap(p) {
            self.emit(events, MechanicKind::TriggerTrap, p);
            self.hurt_hero(1);
        }
        if let Some(twin) = self.level.portal_twin(p) {
            let occupied = self.monsters.iter().any(|m| m.alive && m.pos == twin && !m.is_passable());
            if !occupied {
                self.emit(events, MechanicKind::UsePortal, p);
                self.hero = twin;
                self.pick_up_javelin(twin);
            }
        }
    }

    fn hero_throw(&mut self, target: Pos, events: &mut Vec<MechanicEvent>) {
        self.emit(events, MechanicKind::JavelinThrow, target);
        if let Some(i) = self.monster_at(target) {
            self.hero_hits_monster(i, events);
        }
        self.javelin = Javelin::OnGround(target);
    }

    fn monster_phase(&mut self, events: &mut Vec<MechanicEvent>) {
        let mut order: Vec<usize> = (0..self.monsters.len()).filter(|&i| self.monsters[i].alive).collect();
        order.sort_by_key(|&i| (self.monsters[i].pos, i));
        for i in order {
            if self.hero_hp == 0 {
                break;
            }
            if self.monsters[i].alive {
                self.monster_act(i, events);
            }
        }
    }

    /// Greedy step that strictly reduces the walking distance to `target`,
    /// ties broken row-major by candidate tile. The hero's tile is always a
    /// candidate (stepping into it is an attack).
    fn step_toward(&self, i: usize, target: Pos) -> Option<Pos> {
        let me = &self.monsters[i];
        let level = &*self.level;
        let current = level.distance(me.pos, target)?;
        let mut best: Option<(u32, Pos)> = None;
        for dir in Direction::ALL {
            let q = me.pos.step(dir);
            if !level.is_floor(q) {
                continue;
            }
            if q != self.hero && !self.monster_may_enter(i, q) {
                continue;
            }
            let Some(d) = level.distance(q, target) else { continue };
            if d < current && best.is_none_or(|b| (d, q) < b) {
                best = Some((d, q));
            }
        }
        best.map(|(_, q)| q)
    }

    /// Monsters may not share tiles, except that blobs merge into blobs and
    /// ogres attack ogres.
    fn monster_may_enter(&self, i: usize, q: Pos) -> bool {
        let kind = self.monsters[i].kind;
        self.monsters.iter().enumerate().all(|(j, other)| {
            j == i
                || !other.alive
                || other.pos != q
                || (kind == MonsterKind::Blob && other.kind == MonsterKind::Blob)
                || (kind == MonsterKind::Ogre && other.kind == MonsterKind::Ogre)
        })
    }

    /// Nearest of the hero and any sighted item of the preferred kind;
    /// items win ties, then row-major.
    fn pick_target(&self, i: usize, item: Pickup) -> Option<Pos> {
        let me = self.monsters[i].pos;
        let level = &*self.level;
        let mut best: Option<(u32, u8, Pos)> = None;
        let mut consider = |d: Option<u32>, rank: u8, p: Pos| {
            if let Some(d) = d {
                if best.is_none_or(|b| (d, rank, p) < b) {
                    best = Some((d, rank, p));
                }
            }
        };
        for (p, k) in &self.pickups {
            if *k == item && level.has_line_of_sight(me, *p) {
                consider(level.distance(me, *p), 0, *p);
            }
        }
        if level.has_line_of_sight(me, self.hero) {
            consider(level.distance(me, self.hero), 1, self.hero);
        }
        best.map(|(_, _, p)| p)
    }

    fn monster_act(&mut self, i: usize, events: &mut Vec<MechanicEvent>) {
        let me = self.monsters[i];
        let sees_hero = self.level.has_line_of_sight(me.pos, self.hero);
        let step = match me.kind {
            MonsterKind::Minitaur => {
                if me.stun_turns > 0 {
                    self.monsters[i].stun_turns -= 1;
                    return;
                }
                if me.pos == self.hero {
                    self.hurt_hero(me.contact_damage());
                    return;
                }
                self.step_toward(i, self.hero)
            }
            MonsterKind::Goblin => sees_hero.then(|| self.step_toward(i, self.hero)).flatten(),
            MonsterKind::GoblinWizard => {
                if !sees_hero {
                    return;
                }
                if me.pos.euclidean_sq(self.hero) <= WIZARD_RANGE_SQ {
                    self.hurt_hero(1);
                    return;
                }
                self.step_toward(i, self.hero)
            }
            MonsterKind::Blob => self.pick_target(i, Pickup::Potion).and_then(|t| self.step_toward(i, t)),
            MonsterKind::Ogre => self.pick_target(i, Pickup::Treasure).and_then(|t| self.step_toward(i, t)),
        };
        if let Some(to) = step {
            self.advance(i, to, events);
        }
    }

    fn advance(&mut self, i: usize, to: Pos, events: &mut Vec<MechanicEvent>) {
        if to == self.hero {
            let damage = self.monsters[i].contact_damage();
            self.hurt_hero(damage);
            return;
        }
        let kind = self.monsters[i].kind;
        if let Some(j) = (0..self.monsters.len()).find(|&j| j != i && self.monsters[j].alive && self.monsters[j].pos == to) {
            match kind {
                MonsterKind::Blob => {
                    let level = self.monsters[i].blob_level.max(self.monsters[j].blob_level);
                    let level = (level + 1).min(MAX_BLOB_LEVEL);
                    self.monsters[j].alive = false;
                    let me = &mut self.monsters[i];
                    me.blob_level = level;
                    me.hp = level;
                    self.emit(events, MechanicKind::BlobCombine, to);
                }
                MonsterKind::Ogre => {
                    let other = &mut self.monsters[j];
                    other.hp = other.hp.saturating_sub(2);
                    if other.hp == 0 {
                        other.alive = false;
                    }
                    return;
                }
                _ => return,
            }
        }
        self.monsters[i].pos = to;
        match (kind, self.pickup_at(to)) {
            (MonsterKind::Blob, Some(Pickup::Potion)) => {
                self.remove_pickup(to);
                let me = &mut self.monsters[i];
                me.blob_level = (me.blob_level + 1).min(MAX_BLOB_LEVEL);
                me.hp = me.blob_level;
                self.emit(events, MechanicKind::BlobPotion, to);
            }
            (MonsterKind::Ogre, Some(Pickup::Treasure)) => {
                self.remove_pickup(to);
                self.ogre_treasure += 1;
                self.emit(events, MechanicKind::OgreTreasure, to);
            }
            _ => {}
        }
        if self.level.is_trap(to) {
            self.emit(events, MechanicKind::TriggerTrap, to);
            let me = &mut self.monsters[i];
            if me.kind.is_immortal() {
                me.stun_turns = MINITAUR_STUN_TURNS;
            } else {
                me.hp = me.hp.saturating_sub(1);
                if me.hp == 0 {
                    me.alive = false;
                }
            }
        }
    }
}
