use std::sync::Arc;

use persona_core::engine::{
    apply_action, legal_actions, load_map, GameState, Level, MechanicKind, MonsterKind, Outcome, MECHANIC_COUNT,
};
use persona_core::trace::{
    mechanic_frequencies, read_traces_from, record_episode, write_traces_to, ActionSource, Normalizer, TraceSource,
};
use proptest::prelude::*;

const MAPS: [&str; 3] = [
    "\
##########
#@..g..$.#
#.##.##..#
#.#+..#b.#
#..^..w..#
#.##.##o.#
#$.b...$S#
##########",
    "\
##########
#@.1...$.#
#.####.#.#
#..m.^...#
#.##.#.#g#
#$..1..bS#
##########",
    "\
#########
#@.$.o.$#
#.#####.#
#b.+.b.g#
#.#####.#
#w..^..S#
#########",
];

fn level(i: usize) -> Arc<Level> {
    Arc::new(load_map(&format!("prop{i}"), MAPS[i]).unwrap())
}

/// Picks legal actions by index from a fixed list of choices.
struct Chooser(Vec<usize>, usize);

impl ActionSource for Chooser {
    fn next_action(&mut self, state: &GameState) -> Option<persona_core::engine::Action> {
        let legal = legal_actions(state).ok()?;
        let pick = *self.0.get(self.1)?;
        self.1 += 1;
        legal.get(pick % legal.len()).copied()
    }
}

fn initial_treasures(level: &Level) -> u32 {
    level.items().iter().filter(|(k, _)| *k == persona_core::engine::ItemKind::Treasure).count() as u32
}

fn check_state(state: &GameState, treasures: u32) {
    assert_eq!(state.treasures_remaining() as u32 + state.treasure_score() + state.treasures_eaten(), treasures);
    for m in state.monsters() {
        assert!(m.blob_level <= 3);
        match m.kind {
            MonsterKind::Blob => assert!(m.hp <= m.blob_level),
            MonsterKind::Minitaur => assert!(m.stun_turns <= 5),
            k => assert!(m.hp <= k.initial_hp()),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn transitions_are_deterministic_and_conserve(map in 0..MAPS.len(), picks in proptest::collection::vec(0usize..16, 1..120)) {
        let level = level(map);
        let treasures = initial_treasures(&level);
        let mut state = GameState::new(level);
        for p in picks {
            if state.outcome() != Outcome::Ongoing {
                break;
            }
            let legal = legal_actions(&state).unwrap();
            let a = legal[p % legal.len()];
            let (s1, e1) = apply_action(&state, a).unwrap();
            let (s2, e2) = apply_action(&state, a).unwrap();
            prop_assert_eq!(serde_json::to_string(&s1.snapshot()).unwrap(), serde_json::to_string(&s2.snapshot()).unwrap());
            prop_assert_eq!(&e1, &e2);
            prop_assert_eq!(e1.iter().filter(|e| e.kind == MechanicKind::EndTurn).count(), 1);
            check_state(&s1, treasures);
            state = s1;
        }
    }

    #[test]
    fn recorded_traces_replay_and_round_trip(map in 0..MAPS.len(), picks in proptest::collection::vec(0usize..16, 1..150)) {
        let n = picks.len();
        let trace = record_episode(level(map), TraceSource::Human("prop".into()), &mut Chooser(picks, 0), 500).unwrap();
        prop_assert!(trace.len() <= n);
        trace.validate().unwrap();
        let states = trace.replay().unwrap();
        for (rec, s) in trace.turns.iter().zip(&states[1..]) {
            prop_assert_eq!(rec.state_hash, s.state_hash());
        }

        let f = mechanic_frequencies(&trace);
        prop_assert_eq!(f.get(MechanicKind::EndTurn) as usize, trace.len());
        prop_assert!(f.get(MechanicKind::Die) + f.get(MechanicKind::ReachStairs) <= 1.0);
        prop_assert!(f.values.iter().all(|v| *v >= 0.0 && v.fract() == 0.0));
        prop_assert_eq!(f.values.len(), MECHANIC_COUNT);

        let mut buf = Vec::new();
        write_traces_to(&mut buf, std::slice::from_ref(&trace)).unwrap();
        let back = read_traces_from(buf.as_slice()).unwrap();
        prop_assert_eq!(&back[0], &trace);
        prop_assert_eq!(mechanic_frequencies(&back[0]), f);
        let norm = Normalizer::fit([&f]).unwrap().apply(&f).unwrap();
        prop_assert!(norm.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
