use std::fs;

use persona_core::engine::{legal_actions, Action, GameState, ItemKind, Javelin, MonsterKind, Pickup, Pos, TileKind};
use persona_core::labeling::QuestionnaireScores;
use persona_core::learn::{LstmConfig, SvmConfig};
use persona_core::personas::{PersonaKind, PlanBudget};
use persona_core::trace::{
    crop_sequence, record_episode, write_traces, ActionSource, Channel, TraceSource, CHANNEL_COUNT,
};
use persona_pipeline::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct RandomPlayer(ChaCha8Rng);

impl ActionSource for RandomPlayer {
    fn next_action(&mut self, state: &GameState) -> Option<Action> {
        let legal = legal_actions(state).ok()?;
        Some(legal[self.0.gen_range(0..legal.len())])
    }
}

/// Renders the whole map into per-tile channel vectors, padded by one ring
/// of wall, then reads the 3×3 block around the hero.
fn full_state_crop(s: &GameState) -> (Vec<f64>, f64) {
    let level = s.level();
    let (w, h) = (level.width() as i32 + 2, level.height() as i32 + 2);
    let mut grid = vec![[0.0f64; CHANNEL_COUNT]; (w * h) as usize];
    let at = |x: i32, y: i32| ((y + 1) * w + (x + 1)) as usize;
    for y in -1..h - 1 {
        for x in -1..w - 1 {
            let p = Pos::new(x, y);
            let inside = x >= 0 && y >= 0 && x < w - 2 && y < h - 2;
            let ch = if inside && p == level.exit() {
                Channel::Exit
            } else if !inside || level.tile(p) == TileKind::Wall {
                Channel::Wall
            } else {
                Channel::Floor
            };
            grid[at(x, y)][ch as usize] = 1.0;
        }
    }
    for (k, p) in level.items() {
        match k {
            ItemKind::Trap => grid[at(p.x, p.y)][Channel::Trap as usize] = 1.0,
            ItemKind::Portal(_) => grid[at(p.x, p.y)][Channel::Portal as usize] = 1.0,
            _ => {}
        }
    }
    for (p, k) in s.pickups() {
        let ch = if *k == Pickup::Treasure { Channel::Treasure } else { Channel::Potion };
        grid[at(p.x, p.y)][ch as usize] = 1.0;
    }
    for m in s.monsters().iter().filter(|m| m.alive) {
        let (ch, v) = match m.kind {
            MonsterKind::Goblin => (Channel::Goblin, 1.0),
            MonsterKind::GoblinWizard => (Channel::Wizard, 1.0),
            MonsterKind::Blob => (Channel::Blob, m.blob_level as f64 / 3.0),
            MonsterKind::Ogre => (Channel::Ogre, 1.0),
            MonsterKind::Minitaur => (Channel::Minitaur, 1.0),
        };
        grid[at(m.pos.x, m.pos.y)][ch as usize] = v;
    }
    if let Javelin::OnGround(p) = s.javelin() {
        grid[at(p.x, p.y)][Channel::JavelinOnGround as usize] = 1.0;
    }
    let hero = s.hero_pos();
    let mut out = Vec::new();
    for dy in -1..=1 {
        for dx in -1..=1 {
            out.extend_from_slice(&grid[at(hero.x + dx, hero.y + dy)]);
        }
    }
    (out, s.hero_hp() as f64 / 10.0)
}

#[test]
fn crop_matches_full_state_render_on_reference_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for level in reference_levels() {
        let mut player = RandomPlayer(ChaCha8Rng::seed_from_u64(rng.gen()));
        let trace = record_episode(level.clone(), TraceSource::Human("crop".into()), &mut player, 80).unwrap();
        let states = trace.replay().unwrap();
        let seq = crop_sequence(&trace).unwrap();
        assert_eq!(seq.len(), trace.len());
        for _ in 0..20 {
            let t = rng.gen_range(0..trace.len());
            let (window, hp) = full_state_crop(&states[t]);
            assert_eq!(seq.steps[t].window, window, "{} turn {t}", level.name());
            assert_eq!(seq.steps[t].hero_hp, hp);
        }
    }
}

#[test]
fn personas_separate_on_every_reference_map() {
    let options = SyntheticOptions { runs_per_persona: 1, ..SyntheticOptions::default() };
    let corpus = generate_synthetic(&reference_levels(), &options).unwrap();
    for level in reference_levels() {
        let summary: Vec<(usize, usize, usize)> = corpus
            .traces
            .iter()
            .filter(|t| t.map_name == level.name())
            .map(|t| (t.len(), t.treasures_collected(), t.monsters_killed()))
            .collect();
        assert_eq!(summary.len(), 3);
        for i in 0..3 {
            for j in i + 1..3 {
                assert_ne!(summary[i], summary[j], "{}", level.name());
            }
        }
    }
}

fn small_config(dir: &std::path::Path, labeler: LabelerConfig, model: ModelConfig) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(labeler, model, dir);
    cfg.maps = vec!["three_halls".into(), "portal_run".into()];
    cfg.runs_per_persona = 4;
    cfg
}

#[test]
fn identical_configs_give_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let mut cfg = small_config(&dir.path().join(sub), LabelerConfig::Aar { budget: PlanBudget::NodeBudget(2000) }, ModelConfig::Svm(SvmConfig::default()));
        cfg.test_maps = vec![HELD_OUT_MAP.0.into()];
        run_experiment(&cfg).unwrap();
        let path = dir.path().join(sub);
        ["report.json", "labels.jsonl", "traces.jsonl", "features.csv", "model-svm.json", "summary.txt"]
            .map(|f| fs::read(path.join(f)).unwrap())
    };
    assert_eq!(run("a"), run("b"));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["files"].as_array().unwrap().len(), 6);
}

#[test]
fn known_labels_overfit_and_collapse_on_the_held_out_map() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path(), LabelerConfig::Known, ModelConfig::Svm(SvmConfig::default()));
    cfg.test_maps = vec![HELD_OUT_MAP.0.into()];
    let out = run_experiment(&cfg).unwrap();
    let r = &out.report;
    assert_eq!((r.trace_count, r.test_count), (24, 12));
    assert_eq!(r.summary.train.mean, 1.0);
    assert_eq!(r.summary.validation.mean, 1.0);
    assert!(r.summary.test.unwrap().mean <= 0.7);
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.lines().nth(1).unwrap().starts_with("SVM"));
}

#[test]
fn lstm_runs_three_replicas() {
    let dir = tempfile::tempdir().unwrap();
    let lstm = LstmConfig { hidden: 6, epochs: 2, learning_rate: 0.01, ..LstmConfig::default() };
    let mut cfg = small_config(dir.path(), LabelerConfig::Known, ModelConfig::Lstm(lstm));
    cfg.runs_per_persona = 2;
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.lstm.len(), 3);
    let seeds: Vec<Option<u64>> = out.report.replicas.iter().map(|r| r.seed).collect();
    assert_eq!(seeds, vec![Some(0), Some(1), Some(2)]);
    for s in [0, 1, 2] {
        assert!(dir.path().join(format!("model-lstm-seed{s}.json")).exists());
    }
    assert!(out.report.summary.test.is_none());
    assert!(out.report.summary.train.std >= 0.0);
}

#[test]
fn self_perceived_labels_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let level = builtin_map("open_arena").unwrap();
    let mut traces = Vec::new();
    let mut lines = String::new();
    for i in 0..8u64 {
        let session = format!("player{i}");
        let mut p = RandomPlayer(ChaCha8Rng::seed_from_u64(i));
        traces.push(record_episode(level.clone(), TraceSource::Human(session.clone()), &mut p, 40).unwrap());
        let a = |q: u64| (i + q) % 5;
        lines.push_str(&format!("{session},{}\n", (1..=10).map(|q| a(q).to_string()).collect::<Vec<_>>().join(",")));
    }
    let traces_path = dir.path().join("human.jsonl");
    write_traces(&traces_path, &traces).unwrap();
    let responses = dir.path().join("answers.csv");
    fs::write(&responses, &lines).unwrap();
    let means = dir.path().join("means.json");
    let m = QuestionnaireScores { runner: 2.0, treasure_collector: 2.0, monster_killer: 2.0 };
    fs::write(&means, serde_json::to_string(&m).unwrap()).unwrap();

    let mut cfg = ExperimentConfig::new(
        LabelerConfig::SelfPerceived { responses, means },
        ModelConfig::Svm(SvmConfig::default()),
        dir.path().join("out"),
    );
    cfg.maps.clear();
    cfg.traces = Some(traces_path.clone());
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.report.trace_count, 8);
    assert_eq!(out.report.summary.labels, "self_perceived");

    cfg.labeler = LabelerConfig::Known;
    match run_experiment(&cfg) {
        Err(PipelineError::Stage { stage, .. }) => assert_eq!(stage, "label"),
        other => panic!("expected a label stage error, got {:?}", other.map(|o| o.report)),
    }
}

#[test]
fn labeling_leaves_traces_untouched() {
    let options = SyntheticOptions { runs_per_persona: 1, ..SyntheticOptions::default() };
    let corpus = generate_synthetic(&[builtin_map("catacombs").unwrap()], &options).unwrap();
    let before = corpus.clone();
    let labels = label_corpus(&corpus, &LabelerConfig::Aar { budget: PlanBudget::default() }).unwrap();
    assert_eq!(corpus, before);
    for (r, t) in labels.iter().zip(&corpus.traces) {
        assert!(r.labels.get(t.persona().unwrap()));
    }
    assert!(labels[0].labels.get(PersonaKind::Runner));
}
