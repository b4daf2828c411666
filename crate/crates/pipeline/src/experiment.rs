//! End-to-end runs: data, labels, split, training, evaluation, artifacts.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use persona_core::labeling::{write_label_records, LabelRecord, LabelSet};
use persona_core::learn::{
    evaluate, labels_from_probabilities, split_dataset, svm_predict, train_lstm_replicas, train_svm, EvalReport,
    LstmConfig, LstmModel, MeanStd, SplitName, SvmConfig, SvmModel,
};
use persona_core::personas::{PersonaSpec, PlanBudget};
use persona_core::trace::{crop_sequence, mechanic_frequencies, write_features_csv, FeatureRow, FeatureVector, Normalizer};
use serde::{Deserialize, Serialize};

use crate::corpus::{generate_synthetic, Corpus, SyntheticOptions};
use crate::labels::{aar_corpus_labels, known_labels, questionnaire_corpus_labels, read_means_file, read_questionnaire_file};
use crate::maps::resolve_map;
use crate::PipelineError;

mod budget_text {
    use persona_core::personas::PlanBudget;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &PlanBudget, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&b.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<PlanBudget, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

fn default_budget() -> PlanBudget {
    PlanBudget::default()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LabelerConfig {
    /// The persona that generated each synthetic trace.
    Known,
    Aar {
        #[serde(with = "budget_text", default = "default_budget")]
        budget: PlanBudget,
    },
    /// Questionnaire answers keyed by session id, with corpus means fixed
    /// in a separate file.
    SelfPerceived { responses: PathBuf, means: PathBuf },
}

impl LabelerConfig {
    pub fn name(&self) -> &'static str {
        match self {
            LabelerConfig::Known => "known",
            LabelerConfig::Aar { .. } => "aar",
            LabelerConfig::SelfPerceived { .. } => "self_perceived",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Svm(SvmConfig),
    Lstm(LstmConfig),
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::Svm(_) => "svm",
            ModelConfig::Lstm(_) => "lstm",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Shipped map names or map file paths used for generation.
    #[serde(default)]
    pub maps: Vec<String>,
    /// Trace file to use instead of generating.
    #[serde(default)]
    pub traces: Option<PathBuf>,
    #[serde(default = "default_runs")]
    pub runs_per_persona: usize,
    #[serde(with = "budget_text", default = "default_budget")]
    pub budget: PlanBudget,
    #[serde(default = "default_max_turns")]
    pub max_turns: u32,
    pub labeler: LabelerConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_ratio")]
    pub split_ratio: f64,
    /// Maps whose persona traces form the test set.
    #[serde(default)]
    pub test_maps: Vec<String>,
    /// Trace file appended to the test set.
    #[serde(default)]
    pub test_traces: Option<PathBuf>,
    pub output_dir: PathBuf,
}

fn default_runs() -> usize {
    100
}

fn default_max_turns() -> u32 {
    persona_core::trace::DEFAULT_MAX_TURNS
}

fn default_ratio() -> f64 {
    0.7
}

impl ExperimentConfig {
    /// Generation on the reference maps with default settings.
    pub fn new(labeler: LabelerConfig, model: ModelConfig, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            maps: crate::maps::reference_map_names(),
            traces: None,
            runs_per_persona: default_runs(),
            budget: default_budget(),
            max_turns: default_max_turns(),
            labeler,
            model,
            seed: 0,
            split_ratio: default_ratio(),
            test_maps: Vec::new(),
            test_traces: None,
            output_dir: output_dir.into(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let cfg: Self = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.runs_per_persona == 0 {
            return bad("runs_per_persona must be at least 1".into());
        }
        if self.maps.is_empty() && self.traces.is_none() {
            return bad("either maps or traces must be given".into());
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad(format!("split_ratio {} must lie strictly between 0 and 1", self.split_ratio));
        }
        self.budget.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        let mut files: Vec<&Path> = self.traces.iter().chain(&self.test_traces).map(PathBuf::as_path).collect();
        if let LabelerConfig::SelfPerceived { responses, means } = &self.labeler {
            files.extend([responses.as_path(), means.as_path()]);
        }
        if let Some(missing) = files.iter().find(|p| !p.exists()) {
            return bad(format!("{} does not exist", missing.display()));
        }
        for m in self.maps.iter().chain(&self.test_maps) {
            resolve_map(m)?;
        }
        Ok(())
    }

    fn synthetic_options(&self) -> SyntheticOptions {
        SyntheticOptions {
            personas: PersonaSpec::all_default(),
            runs_per_persona: self.runs_per_persona,
            budget: self.budget,
            max_turns: self.max_turns,
        }
    }
}

/// Scores of one trained model; the LSTM produces one per replica.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaReport {
    pub seed: Option<u64>,
    pub train: EvalReport,
    pub validation: EvalReport,
    pub test: Option<EvalReport>,
}

/// Exact-match accuracy per split across replicas, as mean ± std.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: String,
    pub data: String,
    pub labels: String,
    pub train: MeanStd,
    pub validation: MeanStd,
    pub test: Option<MeanStd>,
}

impl ResultRow {
    pub fn header() -> String {
        format!("{:<6} {:<10} {:<15} {:>15} {:>15} {:>15}", "model", "data", "labels", "training", "validation", "testing")
    }
}

impl std::fmt::Display for ResultRow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let test = self.test.map_or("-".to_string(), |t| t.to_string());
        write!(
            f,
            "{:<6} {:<10} {:<15} {:>15} {:>15} {:>15}",
            self.model.to_uppercase(),
            self.data,
            self.labels,
            self.train.to_string(),
            self.validation.to_string(),
            test
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub trace_count: usize,
    pub test_count: usize,
    /// Traces per label combination, in table order.
    pub label_counts: [usize; 8],
    pub replicas: Vec<ReplicaReport>,
    /// Labels with a single class in training, predicted as a constant.
    pub degenerate_labels: Vec<usize>,
    pub summary: ResultRow,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub files: Vec<ManifestEntry>,
    /// Wall-clock seconds per stage; the only nondeterministic content.
    pub stage_seconds: Vec<(String, f64)>,
}

pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub svm: Option<SvmModel>,
    pub lstm: Vec<LstmModel>,
    pub manifest_path: PathBuf,
}

fn stage(stage: &'static str) -> impl Fn(String) -> PipelineError {
    move |message| PipelineError::Stage { stage, message }
}

pub fn label_corpus(corpus: &Corpus, labeler: &LabelerConfig) -> Result<Vec<LabelRecord>, PipelineError> {
    match labeler {
        LabelerConfig::Known => known_labels(corpus),
        LabelerConfig::Aar { budget } => aar_corpus_labels(corpus, &PersonaSpec::all_default(), *budget),
        LabelerConfig::SelfPerceived { responses, means } => {
            questionnaire_corpus_labels(corpus, &read_questionnaire_file(responses)?, &read_means_file(means)?)
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| PipelineError::Io(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome, PipelineError> {
    config.validate()?;
    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(|e| PipelineError::Io(format!("{}: {e}", out.display())))?;
    let mut timings: Vec<(String, f64)> = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, timings: &mut Vec<(String, f64)>| {
        timings.push((name.to_string(), clock.elapsed().as_secs_f64()));
        clock = Instant::now();
    };

    let corpus = match &config.traces {
        Some(p) => Corpus::load(p)?,
        None => {
            let levels = config.maps.iter().map(|m| resolve_map(m)).collect::<Result<Vec<_>, _>>()?;
            generate_synthetic(&levels, &config.synthetic_options())?
        }
    };
    let mut test = Corpus::default();
    if !config.test_maps.is_empty() {
        let levels = config.test_maps.iter().map(|m| resolve_map(m)).collect::<Result<Vec<_>, _>>()?;
        test = generate_synthetic(&levels, &config.synthetic_options())?;
    }
    if let Some(p) = &config.test_traces {
        let extra = Corpus::load(p)?;
        for (id, t) in extra.ids.into_iter().zip(extra.traces) {
            test.push(id, t);
        }
    }
    lap("data", &mut timings);

    let records = label_corpus(&corpus, &config.labeler)?;
    let labels: Vec<LabelSet> = records.iter().map(|r| r.labels).collect();
    let test_records = if test.is_empty() { Vec::new() } else { label_corpus(&test, &config.labeler)? };
    let test_labels: Vec<LabelSet> = test_records.iter().map(|r| r.labels).collect();
    lap("label", &mut timings);

    let split = split_dataset(&labels, config.split_ratio, config.seed).map_err(|e| stage("split")(e.to_string()))?;
    let pick = |idx: &[usize]| idx.iter().map(|i| labels[*i]).collect::<Vec<_>>();
    let (train_labels, val_labels) = (pick(&split.train), pick(&split.validation));

    let mut report_replicas = Vec::new();
    let mut svm_model = None;
    let mut lstm_models = Vec::new();
    let mut degenerate = Vec::new();
    let mut files: Vec<PathBuf> = Vec::new();

    let raw: Vec<FeatureVector> = corpus.traces.iter().map(mechanic_frequencies).collect();
    match &config.model {
        ModelConfig::Svm(svm_cfg) => {
            let train_raw: Vec<FeatureVector> = split.train.iter().map(|i| raw[*i]).collect();
            let normalizer = Normalizer::fit(&train_raw).map_err(|e| stage("features")(e.to_string()))?;
            let norm = |v: &FeatureVector| normalizer.apply(v).map_err(|e| stage("features")(e.to_string()));
            let train_x = train_raw.iter().map(norm).collect::<Result<Vec<_>, _>>()?;
            lap("features", &mut timings);
            let model = train_svm(&train_x, &train_labels, normalizer.clone(), svm_cfg).map_err(|e| stage("train")(e.to_string()))?;
            lap("train", &mut timings);
            let predict = |vs: &[FeatureVector]| -> Result<Vec<LabelSet>, PipelineError> {
                vs.iter()
                    .map(|v| svm_predict(&model, &norm(v)?).map(|p| p.0).map_err(|e| stage("evaluate")(e.to_string())))
                    .collect()
            };
            let val_raw: Vec<FeatureVector> = split.validation.iter().map(|i| raw[*i]).collect();
            let test_raw: Vec<FeatureVector> = test.traces.iter().map(mechanic_frequencies).collect();
            let ev = |p: Vec<LabelSet>, t: &[LabelSet], s| evaluate(&p, t, s).map_err(|e| stage("evaluate")(e.to_string()));
            report_replicas.push(ReplicaReport {
                seed: None,
                train: ev(predict(&train_raw)?, &train_labels, SplitName::Train)?,
                validation: ev(predict(&val_raw)?, &val_labels, SplitName::Validation)?,
                test: if test.is_empty() { None } else { Some(ev(predict(&test_raw)?, &test_labels, SplitName::Test)?) },
            });
            degenerate = model.degenerate_labels();
            let p = out.join("model-svm.json");
            fs::write(&p, model.to_json().map_err(|e| stage("write")(e.to_string()))?).map_err(|e| PipelineError::Io(e.to_string()))?;
            files.push(p);
            svm_model = Some(model);
            lap("evaluate", &mut timings);
        }
        ModelConfig::Lstm(lstm_cfg) => {
            let seqs = |c: &Corpus, idx: &[usize]| -> Result<Vec<Vec<Vec<f64>>>, PipelineError> {
                idx.iter().map(|i| crop_sequence(&c.traces[*i]).map(|s| s.inputs()).map_err(|e| stage("features")(e.to_string()))).collect()
            };
            let train_x = seqs(&corpus, &split.train)?;
            let val_x = seqs(&corpus, &split.validation)?;
            let test_x = seqs(&test, &(0..test.len()).collect::<Vec<_>>())?;
            lap("features", &mut timings);
            let models = train_lstm_replicas(&train_x, &train_labels, lstm_cfg).map_err(|e| stage("train")(e.to_string()))?;
            lap("train", &mut timings);
            for m in &models {
                let predict = |xs: &[Vec<Vec<f64>>]| -> Result<Vec<LabelSet>, PipelineError> {
                    xs.iter()
                        .map(|x| m.params.forward(x).map(labels_from_probabilities).map_err(|e| stage("evaluate")(e.to_string())))
                        .collect()
                };
                let ev = |p: Vec<LabelSet>, t: &[LabelSet], s| evaluate(&p, t, s).map_err(|e| stage("evaluate")(e.to_string()));
                report_replicas.push(ReplicaReport {
                    seed: Some(m.seed),
                    train: ev(predict(&train_x)?, &train_labels, SplitName::Train)?,
                    validation: ev(predict(&val_x)?, &val_labels, SplitName::Validation)?,
                    test: if test.is_empty() { None } else { Some(ev(predict(&test_x)?, &test_labels, SplitName::Test)?) },
                });
                let p = out.join(format!("model-lstm-seed{}.json", m.seed));
                fs::write(&p, m.to_json().map_err(|e| stage("write")(e.to_string()))?).map_err(|e| PipelineError::Io(e.to_string()))?;
                files.push(p);
            }
            lstm_models = models;
            lap("evaluate", &mut timings);
        }
    }

    let col = |f: fn(&ReplicaReport) -> Option<f64>| -> Option<MeanStd> {
        let v: Vec<f64> = report_replicas.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| MeanStd::of(&v))
    };
    let summary = ResultRow {
        model: config.model.name().into(),
        data: if config.traces.is_some() { "file".into() } else { "synthetic".into() },
        labels: config.labeler.name().into(),
        train: col(|r| Some(r.train.exact_match)).expect("at least one replica"),
        validation: col(|r| Some(r.validation.exact_match)).expect("at least one replica"),
        test: col(|r| r.test.as_ref().map(|t| t.exact_match)),
    };
    let mut label_counts = [0usize; 8];
    for l in &labels {
        label_counts[l.combination_index()] += 1;
    }
    let report = ExperimentReport {
        trace_count: corpus.len(),
        test_count: test.len(),
        label_counts,
        replicas: report_replicas,
        degenerate_labels: degenerate,
        summary,
        warnings: corpus.warnings.iter().chain(&test.warnings).cloned().collect(),
    };

    let traces_path = out.join("traces.jsonl");
    corpus.save(&traces_path)?;
    files.push(traces_path);
    let labels_path = out.join("labels.jsonl");
    let f = File::create(&labels_path).map_err(|e| PipelineError::Io(e.to_string()))?;
    write_label_records(BufWriter::new(f), &records).map_err(|e| PipelineError::Io(e.to_string()))?;
    files.push(labels_path);
    let features_path = out.join("features.csv");
    let rows: Vec<FeatureRow> = corpus
        .ids
        .iter()
        .zip(&raw)
        .zip(&labels)
        .map(|((id, v), l)| FeatureRow { id: id.clone(), features: *v, labels: Some(l.flags()) })
        .collect();
    let f = File::create(&features_path).map_err(|e| PipelineError::Io(e.to_string()))?;
    write_features_csv(BufWriter::new(f), &rows).map_err(|e| stage("write")(e.to_string()))?;
    files.push(features_path);
    let report_path = out.join("report.json");
    write_json(&report_path, &report)?;
    files.push(report_path);
    let summary_path = out.join("summary.txt");
    fs::write(&summary_path, format!("{}\n{}\n", ResultRow::header(), report.summary)).map_err(|e| PipelineError::Io(e.to_string()))?;
    files.push(summary_path);
    lap("write", &mut timings);

    let manifest = Manifest {
        config: config.clone(),
        files: files
            .iter()
            .map(|p| ManifestEntry {
                path: p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
                bytes: fs::metadata(p).map(|m| m.len()).unwrap_or(0),
            })
            .collect(),
        stage_seconds: timings,
    };
    let manifest_path = out.join("manifest.json");
    write_json(&manifest_path, &manifest)?;
    Ok(ExperimentOutcome { report, svm: svm_model, lstm: lstm_models, manifest_path })
}
