//! A* online-planning agents for the three procedural personas.
//!
//! Every turn the agent grows a best-first tree from the current state,
//! ordered by `f = g + h`, and plays the root move that leads to the best
//! node it found before its budget ran out.

use std::cmp::Ordering;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt;
use std::hash::{BuildHasherDefault, Hasher};
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::engine::{push_moves, push_throws};
use crate::engine::{Action, EngineError, GameState, MechanicEvent, MonsterKind, Outcome, Pickup};
use crate::trace::ActionSource;

pub const DEFAULT_C: f64 = 45.0;
pub const DEFAULT_K: f64 = 1e9;
pub const DEFAULT_NODE_BUDGET: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PersonaKind {
    Runner,
    MonsterKiller,
    TreasureCollector,
}

impl PersonaKind {
    /// Label order used across the crate: R, TC, MK.
    pub const ALL: [PersonaKind; 3] = [PersonaKind::Runner, PersonaKind::TreasureCollector, PersonaKind::MonsterKiller];

    pub fn name(self) -> &'static str {
        match self {
            PersonaKind::Runner => "runner",
            PersonaKind::MonsterKiller => "monster_killer",
            PersonaKind::TreasureCollector => "treasure_collector",
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            PersonaKind::Runner => "R",
            PersonaKind::MonsterKiller => "MK",
            PersonaKind::TreasureCollector => "TC",
        }
    }

    /// Position in [`PersonaKind::ALL`].
    pub fn label_index(self) -> usize {
        match self {
            PersonaKind::Runner => 0,
            PersonaKind::TreasureCollector => 1,
            PersonaKind::MonsterKiller => 2,
        }
    }
}

impl fmt::Display for PersonaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PersonaKind {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "runner" | "r" | "R" => Ok(PersonaKind::Runner),
            "monster_killer" | "mk" | "MK" => Ok(PersonaKind::MonsterKiller),
            "treasure_collector" | "tc" | "TC" => Ok(PersonaKind::TreasureCollector),
            other => Err(PlanError::UnknownPersona(other.to_string())),
        }
    }
}

/// A persona with its utility weights: `c` per remaining target and `k` for
/// death.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersonaSpec {
    pub kind: PersonaKind,
    pub c: f64,
    pub k: f64,
}

impl PersonaSpec {
    pub fn new(kind: PersonaKind) -> Self {
        Self { kind, c: DEFAULT_C, k: DEFAULT_K }
    }

    /// Validated constructor. `k` must dominate `c` times any plausible
    /// target count (checked against 10 000 targets).
    pub fn with_weights(kind: PersonaKind, c: f64, k: f64) -> Result<Self, PlanError> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(PlanError::InvalidWeights(format!("c must be positive and finite, got {c}")));
        }
        if !(k.is_finite() && k > c * 10_000.0) {
            return Err(PlanError::InvalidWeights(format!("k = {k} does not dominate c = {c}")));
        }
        Ok(Self { kind, c, k })
    }

    pub fn all_default() -> [PersonaSpec; 3] {
        PersonaKind::ALL.map(PersonaSpec::new)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanBudget {
    /// Stop after this many node expansions. Deterministic.
    NodeBudget(usize),
    /// Stop after this many seconds of search.
    WallClock(f64),
}

impl Default for PlanBudget {
    fn default() -> Self {
        PlanBudget::NodeBudget(DEFAULT_NODE_BUDGET)
    }
}

impl PlanBudget {
    pub fn is_deterministic(&self) -> bool {
        matches!(self, PlanBudget::NodeBudget(_))
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        match *self {
            PlanBudget::NodeBudget(n) if n > 0 => Ok(()),
            PlanBudget::WallClock(s) if s > 0.0 && s.is_finite() => Ok(()),
            other => Err(PlanError::InvalidBudget(other)),
        }
    }
}

impl fmt::Display for PlanBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanBudget::NodeBudget(n) => write!(f, "nodes:{n}"),
            PlanBudget::WallClock(s) => write!(f, "seconds:{s}"),
        }
    }
}

impl FromStr for PlanBudget {
    type Err = PlanError;

    /// Accepts `nodes:N`, `seconds:S`, or a bare integer node count.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PlanError::UnparsableBudget(s.to_string());
        let budget = if let Some(n) = s.strip_prefix("nodes:") {
            PlanBudget::NodeBudget(n.parse().map_err(|_| bad())?)
        } else if let Some(secs) = s.strip_prefix("seconds:") {
            PlanBudget::WallClock(secs.parse().map_err(|_| bad())?)
        } else {
            PlanBudget::NodeBudget(s.parse().map_err(|_| bad())?)
        };
        budget.validate()?;
        Ok(budget)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("no legal actions available")]
    NoLegalActions,
    #[error("unknown persona {0:?}")]
    UnknownPersona(String),
    #[error("invalid persona weights: {0}")]
    InvalidWeights(String),
    #[error("invalid planning budget {0:?}")]
    InvalidBudget(PlanBudget),
    #[error("cannot parse planning budget {0:?}")]
    UnparsableBudget(String),
}

/// One node of the planning tree.
#[derive(Clone, Debug)]
pub struct SearchNode {
    pub state: GameState,
    /// Moves since the planning root.
    pub steps: u32,
    pub g: f64,
    pub h: f64,
    /// Root move this node descends from; `None` for the root.
    pub first_action: Option<Action>,
}

impl SearchNode {
    pub fn f(&self) -> f64 {
        self.g + self.h
    }

    pub fn is_dead(&self) -> bool {
        self.state.outcome() == Outcome::Dead
    }
}

/// Living monsters that can be killed (the minitaur is immortal).
pub fn killable_monsters(state: &GameState) -> usize {
    state.living_monsters().filter(|m| m.kind != MonsterKind::Minitaur).count()
}

fn nearest(state: &GameState, targets: impl Iterator<Item = crate::engine::Pos>) -> Option<f64> {
    let level = state.level();
    targets.map(|p| level.travel_distance_or_sentinel(state.hero_pos(), p)).min().map(f64::from)
}

fn exit_distance(state: &GameState) -> f64 {
    f64::from(state.level().travel_distance_or_sentinel(state.hero_pos(), state.level().exit()))
}

/// Heuristic: distance to the exit for the runner; distance to the nearest
/// remaining target (or the exit once none remain) for the others. Travel
/// distances take portals and ignore monsters; unreachable targets cost grid
/// area + 1.
pub fn persona_heuristic(spec: &PersonaSpec, state: &GameState) -> f64 {
    match spec.kind {
        PersonaKind::Runner => exit_distance(state),
        PersonaKind::MonsterKiller => nearest(
            state,
            state.living_monsters().filter(|m| m.kind != MonsterKind::Minitaur).map(|m| m.pos),
        )
        .unwrap_or_else(|| exit_distance(state)),
        PersonaKind::TreasureCollector => nearest(
            state,
            state.pickups().iter().filter(|(_, k)| *k == Pickup::Treasure).map(|(p, _)| *p),
        )
        .unwrap_or_else(|| exit_distance(state)),
    }
}

/// Path cost: steps for the runner; `c * remaining + k * dead` otherwise.
pub fn persona_cost(spec: &PersonaSpec, node: &SearchNode) -> f64 {
    let dead = if node.is_dead() { 1.0 } else { 0.0 };
    match spec.kind {
        PersonaKind::Runner => f64::from(node.steps),
        PersonaKind::MonsterKiller => spec.c * killable_monsters(&node.state) as f64 + spec.k * dead,
        PersonaKind::TreasureCollector => spec.c * node.state.treasures_remaining() as f64 + spec.k * dead,
    }
}

/// A won state with nothing left to hunt or collect. For the runner any
/// win is the goal.
fn is_goal(spec: &PersonaSpec, state: &GameState) -> bool {
    state.outcome() == Outcome::Won
        && match spec.kind {
            PersonaKind::Runner => true,
            PersonaKind::MonsterKiller => killable_monsters(state) == 0,
            PersonaKind::TreasureCollector => state.treasures_remaining() == 0,
        }
}

/// Actions explored in the planning tree. The runner never considers
/// throwing: it cannot shorten the way to the exit.
fn planning_actions(spec: &PersonaSpec, state: &GameState, out: &mut Vec<Action>) {
    out.clear();
    push_moves(state, out);
    if spec.kind != PersonaKind::Runner || out.is_empty() {
        push_throws(state, out);
    }
}

#[derive(Default)]
struct KeyHasher(u64);

impl Hasher for KeyHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 = self.0.rotate_left(8) ^ u64::from(*b);
        }
    }

    fn write_u64(&mut self, v: u64) {
        self.0 = v;
    }
}

type KeySet = HashSet<u64, BuildHasherDefault<KeyHasher>>;

struct OpenEntry {
    f: f64,
    h: f64,
    root: usize,
    seq: usize,
}

impl OpenEntry {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.f
            .total_cmp(&other.f)
            .then(self.h.total_cmp(&other.h))
            .then(self.root.cmp(&other.root))
            .then(self.seq.cmp(&other.seq))
    }
}

impl PartialEq for OpenEntry {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenEntry {}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpenEntry {
    // Reversed: BinaryHeap is a max-heap and we want the lowest f first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key_cmp(self)
    }
}

/// Counters from one planning call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PlanStats {
    pub expansions: usize,
    pub generated: usize,
    pub reached_goal: bool,
}

/// Plans the next move. Deterministic under [`PlanBudget::NodeBudget`].
pub fn plan_next_action(state: &GameState, spec: &PersonaSpec, budget: PlanBudget) -> Result<Action, PlanError> {
    plan_with_stats(state, spec, budget).map(|(a, _)| a)
}

pub fn plan_with_stats(
    state: &GameState,
    spec: &PersonaSpec,
    budget: PlanBudget,
) -> Result<(Action, PlanStats), PlanError> {
    budget.validate()?;
    if state.outcome() != Outcome::Ongoing {
        return Err(EngineError::TerminalState(state.outcome()).into());
    }
    let mut root_actions = Vec::new();
    planning_actions(spec, state, &mut root_actions);
    match root_actions.len() {
        0 => return Err(PlanError::NoLegalActions),
        1 => return Ok((root_actions[0], PlanStats::default())),
        _ => {}
    }

    let (max_expansions, deadline) = match budget {
        PlanBudget::NodeBudget(n) => (n, None),
        PlanBudget::WallClock(s) => (usize::MAX, Some(Instant::now() + Duration::from_secs_f64(s))),
    };

    let mut nodes: Vec<SearchNode> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    let mut open = BinaryHeap::new();
    let mut seen = KeySet::default();
    let mut events: Vec<MechanicEvent> = Vec::new();
    let mut actions = Vec::new();
    let mut stats = PlanStats::default();
    seen.insert(state.position_key());

    let mut expand = |parent: &GameState,
                      steps: u32,
                      inherited: Option<(usize, Action)>,
                      actions: &[Action],
                      nodes: &mut Vec<SearchNode>,
                      roots: &mut Vec<usize>,
                      open: &mut BinaryHeap<OpenEntry>,
                      stats: &mut PlanStats| {
        for (i, action) in actions.iter().enumerate() {
            let mut child = parent.clone();
            events.clear();
            child.resolve(*action, &mut events);
            if !seen.insert(child.position_key()) {
                continue;
            }
            let (root, first) = inherited.unwrap_or((i, *action));
            let mut node = SearchNode { state: child, steps: steps + 1, g: 0.0, h: 0.0, first_action: Some(first) };
            node.g = persona_cost(spec, &node);
            node.h = persona_heuristic(spec, &node.state);
            let seq = nodes.len();
            if node.state.outcome() != Outcome::Dead {
                open.push(OpenEntry { f: node.f(), h: node.h, root, seq });
            }
            nodes.push(node);
            roots.push(root);
            stats.generated += 1;
        }
    };

    expand(state, 0, None, &root_actions, &mut nodes, &mut roots, &mut open, &mut stats);
    stats.expansions = 1;
    while stats.expansions < max_expansions {
        if let Some(deadline) = deadline {
            if stats.expansions % 32 == 0 && Instant::now() >= deadline {
                break;
            }
        }
        let Some(entry) = open.pop() else { break };
        if nodes[entry.seq].state.outcome() == Outcome::Won {
            // Winning with targets left is a dead end for the collectors,
            // not a reason to stop looking.
            if is_goal(spec, &nodes[entry.seq].state) {
                stats.reached_goal = true;
                break;
            }
            continue;
        }
        let parent = nodes[entry.seq].state.clone();
        let steps = nodes[entry.seq].steps;
        let first = nodes[entry.seq].first_action.expect("non-root node");
        planning_actions(spec, &parent, &mut actions);
        expand(&parent, steps, Some((entry.root, first)), &actions, &mut nodes, &mut roots, &mut open, &mut stats);
        stats.expansions += 1;
    }

    let best = nodes
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            a.is_dead()
                .cmp(&b.is_dead())
                .then(a.f().total_cmp(&b.f()))
                .then(a.h.total_cmp(&b.h))
                .then(roots[*ia].cmp(&roots[*ib]))
                .then(ia.cmp(ib))
        })
        .map(|(_, n)| n.first_action.expect("non-root node"))
        // Every root child was a duplicate of the root itself.
        .unwrap_or(root_actions[0]);
    Ok((best, stats))
}

/// Position key, persona, weight bits and node budget.
type CacheKey = (u64, PersonaKind, u64, u64, usize);

/// Memoizes deterministic plans by position, persona and budget. Planning
/// does not depend on the turn counter, so identical positions reached at
/// different turns share an entry. Wall-clock budgets bypass the cache.
#[derive(Default)]
pub struct PlanCache {
    entries: Mutex<HashMap<CacheKey, Action>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl PlanCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn plan(&self, state: &GameState, spec: &PersonaSpec, budget: PlanBudget) -> Result<Action, PlanError> {
        let PlanBudget::NodeBudget(nodes) = budget else {
            return plan_next_action(state, spec, budget);
        };
        let key = (state.position_key(), spec.kind, spec.c.to_bits(), spec.k.to_bits(), nodes);
        if let Some(action) = self.entries.lock().expect("plan cache poisoned").get(&key) {
            self.hits.fetch_add(1, AtomicOrdering::Relaxed);
            return Ok(*action);
        }
        self.misses.fetch_add(1, AtomicOrdering::Relaxed);
        let action = plan_next_action(state, spec, budget)?;
        match self.entries.lock().expect("plan cache poisoned").entry(key) {
            Entry::Occupied(e) => Ok(*e.get()),
            Entry::Vacant(e) => Ok(*e.insert(action)),
        }
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(AtomicOrdering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(AtomicOrdering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("plan cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A persona playing the game: replans from scratch every turn.
#[derive(Clone)]
pub struct PersonaAgent {
    pub spec: PersonaSpec,
    pub budget: PlanBudget,
    cache: Option<Arc<PlanCache>>,
}

impl PersonaAgent {
    pub fn new(spec: PersonaSpec, budget: PlanBudget) -> Self {
        Self { spec, budget, cache: None }
    }

    pub fn with_cache(mut self, cache: Arc<PlanCache>) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn plan(&self, state: &GameState) -> Result<Action, PlanError> {
        match &self.cache {
            Some(cache) => cache.plan(state, &self.spec, self.budget),
            None => plan_next_action(state, &self.spec, self.budget),
        }
    }
}

impl ActionSource for PersonaAgent {
    fn next_action(&mut self, state: &GameState) -> Option<Action> {
        self.plan(state).ok()
    }
}

#[cfg(test)]
mod tests {
    use std::collections::VecDeque;

    use super::*;
    use crate::engine::{apply_action, legal_actions, load_map, Direction, Pos};

    fn state(map: &str) -> GameState {
        GameState::new(Arc::new(load_map("test", map).unwrap()))
    }

    /// Independent BFS over the raw map text.
    fn bfs(map: &str, from: Pos, to: Pos) -> u32 {
        let grid: Vec<Vec<char>> = map.lines().map(|l| l.chars().collect()).collect();
        let mut dist = HashMap::new();
        dist.insert(from, 0u32);
        let mut queue = VecDeque::from([from]);
        while let Some(p) = queue.pop_front() {
            if p == to {
                return dist[&p];
            }
            for (dx, dy) in [(0, -1), (0, 1), (1, 0), (-1, 0)] {
                let q = Pos::new(p.x + dx, p.y + dy);
                let open = q.y >= 0
                    && (q.y as usize) < grid.len()
                    && q.x >= 0
                    && (q.x as usize) < grid[q.y as usize].len()
                    && grid[q.y as usize][q.x as usize] != '#';
                if open && !dist.contains_key(&q) {
                    dist.insert(q, dist[&p] + 1);
                    queue.push_back(q);
                }
            }
        }
        panic!("unreachable");
    }

    fn node(state: GameState, steps: u32) -> SearchNode {
        SearchNode { state, steps, g: 0.0, h: 0.0, first_action: None }
    }

    #[test]
    fn runner_heuristic_is_exit_distance() {
        let s = state("#####\n#@..S\n#####");
        assert_eq!(persona_heuristic(&PersonaSpec::new(PersonaKind::Runner), &s), 3.0);
    }

    #[test]
    fn monster_killer_without_monsters_heads_for_exit() {
        let s = state("#####\n#@...\n####S");
        assert_eq!(persona_heuristic(&PersonaSpec::new(PersonaKind::MonsterKiller), &s), 4.0);
    }

    #[test]
    fn monster_killer_ignores_the_minitaur() {
        let s = state("#####\n#@m.S\n#####");
        let spec = PersonaSpec::new(PersonaKind::MonsterKiller);
        assert_eq!(persona_heuristic(&spec, &s), 3.0);
        assert_eq!(persona_cost(&spec, &node(s, 0)), 0.0);
    }

    #[test]
    fn treasure_collector_heads_for_nearest_treasure() {
        let map = "#########\n#.$.....#\n#@.....$#\n#S#######";
        let s = state(map);
        let hero = s.hero_pos();
        let d1 = bfs(map, hero, Pos::new(2, 1));
        let d2 = bfs(map, hero, Pos::new(7, 2));
        assert_eq!((d1, d2), (2, 6));
        let h = persona_heuristic(&PersonaSpec::new(PersonaKind::TreasureCollector), &s);
        assert_eq!(h, f64::from(d1.min(d2)));
    }

    #[test]
    fn unreachable_target_uses_sentinel() {
        let s = state("@#g\n.#.\nS#.");
        let h = persona_heuristic(&PersonaSpec::new(PersonaKind::MonsterKiller), &s);
        assert_eq!(h, 10.0);
    }

    #[test]
    fn costs() {
        let s = state("g.g.g\n.....\n@...S");
        let mk = PersonaSpec::new(PersonaKind::MonsterKiller);
        assert_eq!(persona_cost(&mk, &node(s.clone(), 0)), 135.0);
        let mut dead = s.clone();
        dead.hero_hp = 0;
        dead.outcome = Outcome::Dead;
        assert!(persona_cost(&mk, &node(dead, 0)) >= 1e9);
        let runner = PersonaSpec::new(PersonaKind::Runner);
        assert_eq!(persona_cost(&runner, &node(s, 7)), 7.0);
    }

    #[test]
    fn runner_walks_down_the_corridor() {
        let s = state("@..S");
        let spec = PersonaSpec::new(PersonaKind::Runner);
        assert_eq!(plan_next_action(&s, &spec, PlanBudget::default()).unwrap(), Action::Move(Direction::E));
    }

    #[test]
    fn planning_is_deterministic() {
        let s = state("#########\n#@.g..b+#\n#.o.$.w.#\n#..m...S#");
        for spec in PersonaSpec::all_default() {
            let a = plan_next_action(&s, &spec, PlanBudget::NodeBudget(500)).unwrap();
            let b = plan_next_action(&s, &spec, PlanBudget::NodeBudget(500)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn terminal_states_cannot_be_planned() {
        let (won, _) = apply_action(&state("@S"), Action::Move(Direction::E)).unwrap();
        let err = plan_next_action(&won, &PersonaSpec::new(PersonaKind::Runner), PlanBudget::default());
        assert!(matches!(err, Err(PlanError::Engine(EngineError::TerminalState(Outcome::Won)))));
    }

    #[test]
    fn budget_validation_and_parsing() {
        assert!(PlanBudget::NodeBudget(0).validate().is_err());
        assert!(PlanBudget::WallClock(0.0).validate().is_err());
        assert_eq!("nodes:5000".parse::<PlanBudget>().unwrap(), PlanBudget::NodeBudget(5000));
        assert_eq!("seconds:1.0".parse::<PlanBudget>().unwrap(), PlanBudget::WallClock(1.0));
        assert_eq!("250".parse::<PlanBudget>().unwrap(), PlanBudget::NodeBudget(250));
        assert!("nodes:x".parse::<PlanBudget>().is_err());
        assert!(PersonaSpec::with_weights(PersonaKind::MonsterKiller, -1.0, 1e9).is_err());
        assert!(PersonaSpec::with_weights(PersonaKind::MonsterKiller, 45.0, 100.0).is_err());
    }

    #[test]
    fn persona_names_round_trip() {
        for kind in PersonaKind::ALL {
            assert_eq!(kind.name().parse::<PersonaKind>().unwrap(), kind);
        }
        assert!("bard".parse::<PersonaKind>().is_err());
    }

    /// Exhaustive oracle: for each root action, the best (f, depth) over
    /// every state reachable within `depth` moves. The planner must pick a
    /// root that reaches the lowest f in the fewest moves.
    fn exhaustive_best_roots(s: &GameState, spec: &PersonaSpec, depth: u32) -> Vec<Action> {
        let mut per_root = Vec::new();
        for root in legal_actions(s).unwrap() {
            let (first, _) = apply_action(s, root).unwrap();
            let mut best = (f64::INFINITY, u32::MAX);
            let mut seen = HashSet::new();
            let mut frontier = vec![first];
            for d in 1..=depth {
                let mut next = Vec::new();
                for st in frontier {
                    if !seen.insert(st.position_key()) {
                        continue;
                    }
                    let n = SearchNode { steps: d, g: 0.0, h: 0.0, first_action: None, state: st.clone() };
                    let f = persona_cost(spec, &n) + persona_heuristic(spec, &st);
                    if f < best.0 || (f == best.0 && d < best.1) {
                        best = (f, d);
                    }
                    if st.outcome() == Outcome::Ongoing {
                        for a in legal_actions(&st).unwrap() {
                            next.push(apply_action(&st, a).unwrap().0);
                        }
                    }
                }
                frontier = next;
            }
            per_root.push((root, best));
        }
        let top = per_root.iter().map(|(_, b)| *b).min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))).unwrap();
        per_root.into_iter().filter(|(_, b)| *b == top).map(|(a, _)| a).collect()
    }

    #[test]
    fn monster_killer_goes_for_the_goblin_first() {
        // The goblin is out of sight, so it neither moves nor can be hit
        // with the javelin until the hero walks up.
        let s = state("g.###\n#.###\n#@..S");
        let spec = PersonaSpec::new(PersonaKind::MonsterKiller);
        let oracle = exhaustive_best_roots(&s, &spec, 10);
        assert_eq!(oracle, vec![Action::Move(Direction::N)]);
        assert_eq!(plan_next_action(&s, &spec, PlanBudget::default()).unwrap(), Action::Move(Direction::N));
        let runner = PersonaSpec::new(PersonaKind::Runner);
        assert_eq!(plan_next_action(&s, &runner, PlanBudget::default()).unwrap(), Action::Move(Direction::E));
    }

    #[test]
    fn treasure_collector_detours_for_treasure() {
        let s = state("$.@.S");
        let spec = PersonaSpec::new(PersonaKind::TreasureCollector);
        let oracle = exhaustive_best_roots(&s, &spec, 8);
        assert_eq!(oracle, vec![Action::Move(Direction::W)]);
        assert_eq!(plan_next_action(&s, &spec, PlanBudget::default()).unwrap(), Action::Move(Direction::W));
        let runner = PersonaSpec::new(PersonaKind::Runner);
        assert_eq!(plan_next_action(&s, &runner, PlanBudget::default()).unwrap(), Action::Move(Direction::E));
    }

    #[test]
    fn avoids_death_when_possible() {
        // Walking onto the trap at 1 hp kills the hero; the long way is safe.
        let mut s = state("#####\n#@^S#\n#...#\n#####");
        s.hero_hp = 1;
        for spec in PersonaSpec::all_default() {
            let a = plan_next_action(&s, &spec, PlanBudget::default()).unwrap();
            assert_eq!(a, Action::Move(Direction::S), "{spec:?}");
        }
    }

    #[test]
    fn runner_takes_bfs_optimal_route_through_a_maze() {
        let map = "##########\n#@.#.....#\n#.##.###.#\n#....#...#\n####.#.###\n#....#..S#\n##########";
        let mut s = state(map);
        let optimal = bfs(map, s.hero_pos(), s.level().exit());
        let spec = PersonaSpec::new(PersonaKind::Runner);
        let mut moves = 0;
        while s.outcome() == Outcome::Ongoing {
            let a = plan_next_action(&s, &spec, PlanBudget::default()).unwrap();
            s = apply_action(&s, a).unwrap().0;
            moves += 1;
            assert!(moves <= 100);
        }
        assert_eq!(s.outcome(), Outcome::Won);
        assert_eq!(moves, optimal);
    }

    #[test]
    fn cache_returns_the_uncached_plan() {
        let s = state("#########\n#@.g..b+#\n#.o.$.w.#\n#..m...S#");
        let cache = PlanCache::new();
        for spec in PersonaSpec::all_default() {
            let budget = PlanBudget::NodeBudget(300);
            let direct = plan_next_action(&s, &spec, budget).unwrap();
            assert_eq!(cache.plan(&s, &spec, budget).unwrap(), direct);
            assert_eq!(cache.plan(&s, &spec, budget).unwrap(), direct);
        }
        assert_eq!(cache.hits(), 3);
        assert_eq!(cache.misses(), 3);
    }
}
