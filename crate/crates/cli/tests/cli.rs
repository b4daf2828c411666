use std::path::Path;
use std::process::{Command, Output};

fn persona(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_persona")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = persona(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn verbs_chain_from_generation_to_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let gen = ok(d, &["gen", "--map", "portal_run", "--map", "three_halls", "--runs", "2", "--out", "traces.jsonl"]);
    assert!(gen.contains("wrote 12 traces"));

    let labels = ok(d, &["label", "aar", "--traces", "traces.jsonl", "--out", "labels.jsonl"]);
    assert_eq!(labels.lines().count(), 8);
    let total: usize = labels.lines().map(|l| l.split_whitespace().last().unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 12);

    ok(d, &["features", "--traces", "traces.jsonl", "--labels", "labels.jsonl", "--out", "features.csv"]);
    let csv = std::fs::read_to_string(d.join("features.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);

    let stats = ok(d, &["stats", "--traces", "traces.jsonl", "--labels", "labels.jsonl", "--by-map"]);
    assert!(stats.contains("map: portal_run") && stats.contains("map: three_halls"));

    std::fs::write(
        d.join("experiment.toml"),
        "maps = [\"portal_run\", \"three_halls\"]\nruns_per_persona = 3\noutput_dir = \"run\"\n\
         [labeler]\nkind = \"known\"\n[model]\nkind = \"svm\"\n",
    )
    .unwrap();
    let train = ok(d, &["train", "--config", "experiment.toml", "--runs", "2", "--output-dir", "run2"]);
    assert!(train.contains("SVM") && train.contains("known"));
    assert!(d.join("run2/manifest.json").exists() && !d.join("run").exists());

    let eval = ok(d, &["eval", "--model", "run2/model-svm.json", "--traces", "run2/traces.jsonl", "--labels", "run2/labels.jsonl"]);
    let report: serde_json::Value = serde_json::from_str(&eval).unwrap();
    assert_eq!(report["count"], 12);
    assert_eq!(report["exact_match"], 1.0);

    let bench = ok(d, &["bench", "--traces", "traces.jsonl", "--model", "run2/model-svm.json", "--budget", "nodes:500", "--limit", "2"]);
    let bench: serde_json::Value = serde_json::from_str(&bench).unwrap();
    assert_eq!(bench["trace_count"], 2);
    assert!(bench["speedup_ratio"].as_f64().unwrap() > 0.0);
}

#[test]
fn bad_input_fails_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = persona(dir.path(), &["gen", "--map", "nowhere", "--out", "t.jsonl"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere"));
    let out = persona(dir.path(), &["gen", "--budget", "nodes:0", "--out", "t.jsonl"]);
    assert!(!out.status.success());
    let help = ok(dir.path(), &["--help"]);
    for verb in ["gen", "label", "features", "train", "eval", "bench", "stats", "serve"] {
        assert!(help.contains(verb), "{verb}");
    }
}
