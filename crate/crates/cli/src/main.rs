use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use persona_core::labeling::{read_label_records, write_label_records, LabelRecord, LabelSet};
use persona_core::learn::{evaluate, labels_from_probabilities, LstmModel, SplitName, SvmModel};
use persona_core::personas::{PersonaSpec, PlanBudget};
use persona_core::trace::{crop_sequence, mechanic_frequencies, write_features_csv, FeatureRow, DEFAULT_MAX_TURNS};
use persona_pipeline::{
    aar_corpus_labels, bench_aar_vs_inference, generate_synthetic, questionnaire_corpus_labels, questionnaire_means,
    reference_map_names, resolve_map, run_experiment, stats_by_map, stats_report, Corpus, ExperimentConfig,
    ResultRow, SyntheticOptions,
};

#[derive(Parser)]
#[command(name = "persona", version, about = "Persona playtrace pipeline for MiniDungeons 2 style levels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic persona traces.
    Gen(GenArgs),
    /// Label traces.
    #[command(subcommand)]
    Label(LabelCommand),
    /// Write mechanic-frequency features as CSV.
    Features(FeaturesArgs),
    /// Run an experiment from a TOML config.
    Train(TrainArgs),
    /// Score a saved model against labeled traces.
    Eval(EvalArgs),
    /// Time AAR labeling against frequency-model inference.
    Bench(BenchArgs),
    /// Per-label-combination step, treasure and kill statistics.
    Stats(StatsArgs),
    /// Serve live play sessions over HTTP.
    Serve(ServeArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Shipped map names or map files; defaults to the five reference maps.
    #[arg(long = "map")]
    maps: Vec<String>,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    #[arg(long, default_value = "nodes:5000")]
    budget: PlanBudget,
    #[arg(long, default_value_t = DEFAULT_MAX_TURNS)]
    max_turns: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum LabelCommand {
    /// Action agreement against the three default personas.
    Aar {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long, default_value = "nodes:5000")]
        budget: PlanBudget,
        #[arg(long)]
        out: PathBuf,
    },
    /// Questionnaire answers matched to human traces by session id.
    Questionnaire {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        responses: PathBuf,
        /// Fixed corpus means; computed from the responses when absent.
        #[arg(long)]
        means: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long)]
    traces: PathBuf,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    traces: PathBuf,
    #[arg(long)]
    labels: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    traces: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = "seconds:0.05")]
    budget: PlanBudget,
    /// Use only the first N traces.
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    traces: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    by_map: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    #[arg(long, default_value = "sessions")]
    data_dir: PathBuf,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Extra map files offered next to the reference maps.
    #[arg(long = "map")]
    maps: Vec<String>,
}

fn read_labels(path: &Path) -> Result<Vec<LabelRecord>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_label_records(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn write_labels(path: &Path, records: &[LabelRecord]) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_label_records(BufWriter::new(f), records)?;
    Ok(())
}

/// Labels in corpus order, matched by trace id.
fn labels_for(corpus: &Corpus, records: &[LabelRecord]) -> Result<Vec<LabelSet>> {
    corpus
        .ids
        .iter()
        .map(|id| match records.iter().find(|r| &r.trace_id == id) {
            Some(r) => Ok(r.labels),
            None => bail!("no label for trace {id}"),
        })
        .collect()
}

fn gen(args: GenArgs) -> Result<()> {
    let names = if args.maps.is_empty() { reference_map_names() } else { args.maps };
    let levels = names.iter().map(|m| resolve_map(m)).collect::<Result<Vec<_>, _>>()?;
    let options = SyntheticOptions {
        personas: PersonaSpec::all_default(),
        runs_per_persona: args.runs,
        budget: args.budget,
        max_turns: args.max_turns,
    };
    let corpus = generate_synthetic(&levels, &options)?;
    for w in &corpus.warnings {
        eprintln!("warning: {w}");
    }
    corpus.save(&args.out)?;
    println!("wrote {} traces to {}", corpus.len(), args.out.display());
    Ok(())
}

fn label(cmd: LabelCommand) -> Result<()> {
    let (records, out) = match cmd {
        LabelCommand::Aar { traces, budget, out } => {
            (aar_corpus_labels(&Corpus::load(&traces)?, &PersonaSpec::all_default(), budget)?, out)
        }
        LabelCommand::Questionnaire { traces, responses, means, out } => {
            let responses = persona_pipeline::labels::read_questionnaire_file(&responses)?;
            let means = match means {
                Some(p) => persona_pipeline::labels::read_means_file(&p)?,
                None => questionnaire_means(&responses)?,
            };
            (questionnaire_corpus_labels(&Corpus::load(&traces)?, &responses, &means)?, out)
        }
    };
    write_labels(&out, &records)?;
    let mut counts = [0usize; 8];
    for r in &records {
        counts[r.labels.combination_index()] += 1;
    }
    for (combo, n) in LabelSet::ALL_COMBINATIONS.iter().zip(counts) {
        println!("{:<12} {n}", combo.row_name());
    }
    Ok(())
}

fn features(args: FeaturesArgs) -> Result<()> {
    let corpus = Corpus::load(&args.traces)?;
    let labels = match &args.labels {
        Some(p) => Some(labels_for(&corpus, &read_labels(p)?)?),
        None => None,
    };
    let rows: Vec<FeatureRow> = corpus
        .ids
        .iter()
        .zip(&corpus.traces)
        .enumerate()
        .map(|(i, (id, t))| FeatureRow {
            id: id.clone(),
            features: mechanic_frequencies(t),
            labels: labels.as_ref().map(|l| l[i].flags()),
        })
        .collect();
    let f = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_features_csv(BufWriter::new(f), &rows)?;
    println!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(r) = args.runs {
        config.runs_per_persona = r;
    }
    if let Some(d) = args.output_dir {
        config.output_dir = d;
    }
    let outcome = run_experiment(&config)?;
    for w in &outcome.report.warnings {
        eprintln!("warning: {w}");
    }
    println!("{}\n{}", ResultRow::header(), outcome.report.summary);
    println!("artifacts listed in {}", outcome.manifest_path.display());
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let corpus = Corpus::load(&args.traces)?;
    let truth = labels_for(&corpus, &read_labels(&args.labels)?)?;
    let text = std::fs::read_to_string(&args.model).with_context(|| format!("reading {}", args.model.display()))?;
    let predicted: Vec<LabelSet> = if let Ok(svm) = SvmModel::from_json(&text) {
        corpus.traces.iter().map(|t| svm.predict_raw(&mechanic_frequencies(t)).map(|p| p.0)).collect::<Result<_, _>>()?
    } else {
        let lstm = LstmModel::from_json(&text).with_context(|| format!("{} is neither an svm nor an lstm model", args.model.display()))?;
        corpus
            .traces
            .iter()
            .map(|t| Ok(labels_from_probabilities(lstm.predict(&crop_sequence(t)?)?)))
            .collect::<Result<_>>()?
    };
    let report = evaluate(&predicted, &truth, SplitName::Test)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let mut corpus = Corpus::load(&args.traces)?;
    if let Some(n) = args.limit {
        corpus.traces.truncate(n);
    }
    let text = std::fs::read_to_string(&args.model).with_context(|| format!("reading {}", args.model.display()))?;
    let model = SvmModel::from_json(&text)?;
    let report = bench_aar_vs_inference(&corpus.traces, args.budget, &model)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn stats(args: StatsArgs) -> Result<()> {
    let corpus = Corpus::load(&args.traces)?;
    let labels = labels_for(&corpus, &read_labels(&args.labels)?)?;
    if args.by_map {
        for table in stats_by_map(&corpus.traces, &labels) {
            println!("{table}");
        }
    } else {
        print!("{}", stats_report(&corpus.traces, &labels));
    }
    Ok(())
}

fn serve(args: ServeArgs) -> Result<()> {
    let mut maps = persona_pipeline::reference_levels();
    for m in &args.maps {
        maps.push(resolve_map(m)?);
    }
    let state = persona_service::build_state(args.data_dir, maps, args.model.as_deref()).map_err(anyhow::Error::msg)?;
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    println!("listening on http://{}", args.addr);
    runtime.block_on(persona_service::serve(args.addr, state))?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen(a) => gen(a),
        Command::Label(c) => label(c),
        Command::Features(a) => features(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench(a),
        Command::Stats(a) => stats(a),
        Command::Serve(a) => serve(a),
    }
}
