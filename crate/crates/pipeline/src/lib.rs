//! Experiment pipeline over the persona core: synthetic corpus generation,
//! labeling, feature extraction, training, evaluation and reporting.

pub mod bench;
pub mod corpus;
pub mod experiment;
pub mod labels;
pub mod maps;
pub mod stats;

pub use bench::{bench_aar_vs_inference, speedup, BenchReport};
pub use corpus::{generate_synthetic, synthetic_id, Corpus, SyntheticOptions};
pub use experiment::{
    label_corpus, run_experiment, ExperimentConfig, ExperimentOutcome, ExperimentReport, LabelerConfig, Manifest,
    ModelConfig, ReplicaReport, ResultRow,
};
pub use labels::{aar_corpus_labels, known_labels, questionnaire_corpus_labels, questionnaire_means};
pub use stats::{stats_by_map, stats_report, StatsRow, StatsTable};
pub use maps::{builtin_map, held_out_level, map_names, reference_levels, reference_map_names, resolve_map, HELD_OUT_MAP};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("{stage} stage failed: {message}")]
    Stage { stage: &'static str, message: String },
}
