use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use persona_core::engine::Level;
use persona_core::personas::{PersonaAgent, PersonaKind, PersonaSpec, PlanBudget, PlanCache};
use persona_core::trace::{
    read_traces, record_episode, write_traces, Playtrace, RecordError, TraceOutcome, TraceSource, DEFAULT_MAX_TURNS,
};

use crate::PipelineError;

/// Traces with stable identifiers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    pub ids: Vec<String>,
    pub traces: Vec<Playtrace>,
    pub warnings: Vec<String>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn push(&mut self, id: String, trace: Playtrace) {
        self.ids.push(id);
        self.traces.push(trace);
    }

    /// Loads a trace file. Synthetic traces get the ids generation gave
    /// them; human traces are named after their session and file position.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let traces = read_traces(path).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
        let mut runs: HashMap<(String, PersonaKind), usize> = HashMap::new();
        let ids = traces
            .iter()
            .enumerate()
            .map(|(i, t)| match &t.source {
                TraceSource::Human(session) => format!("{session}-{i:05}"),
                TraceSource::Synthetic(kind) => {
                    let run = runs.entry((t.map_name.clone(), *kind)).or_insert(0);
                    *run += 1;
                    synthetic_id(&t.map_name, *kind, *run - 1)
                }
            })
            .collect();
        Ok(Self { ids, traces, warnings: Vec::new() })
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        write_traces(path, &self.traces).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))
    }

    pub fn subset(&self, indices: &[usize]) -> Corpus {
        Corpus {
            ids: indices.iter().map(|i| self.ids[*i].clone()).collect(),
            traces: indices.iter().map(|i| self.traces[*i].clone()).collect(),
            warnings: Vec::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticOptions {
    pub personas: [PersonaSpec; 3],
    pub runs_per_persona: usize,
    pub budget: PlanBudget,
    pub max_turns: u32,
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        Self {
            personas: PersonaSpec::all_default(),
            runs_per_persona: 100,
            budget: PlanBudget::default(),
            max_turns: DEFAULT_MAX_TURNS,
        }
    }
}

pub fn synthetic_id(map: &str, kind: PersonaKind, run: usize) -> String {
    format!("{map}-{}-{run:03}", kind.short())
}

/// One trace per (persona, map, run), in persona, map, run order. Every run
/// is played in full; with a node budget, plans are shared through a cache,
/// so repeated runs cost little and stay identical.
pub fn generate_synthetic(levels: &[Arc<Level>], options: &SyntheticOptions) -> Result<Corpus, PipelineError> {
    if options.runs_per_persona == 0 {
        return Err(PipelineError::Config("runs_per_persona must be at least 1".into()));
    }
    options.budget.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
    let cache = Arc::new(PlanCache::new());
    let mut corpus = Corpus::default();
    for spec in &options.personas {
        for level in levels {
            for run in 0..options.runs_per_persona {
                let mut agent = PersonaAgent::new(*spec, options.budget);
                if options.budget.is_deterministic() {
                    agent = agent.with_cache(cache.clone());
                }
                let trace = match record_episode(level.clone(), TraceSource::Synthetic(spec.kind), &mut agent, options.max_turns) {
                    Ok(t) => t,
                    Err(RecordError::IllegalAction { action, turn, .. }) => {
                        return Err(PipelineError::Stage {
                            stage: "generate",
                            message: format!("{} on {}: planner chose illegal {action} at turn {turn}", spec.kind, level.name()),
                        })
                    }
                };
                let id = synthetic_id(level.name(), spec.kind, run);
                if trace.outcome == TraceOutcome::Abandoned {
                    corpus.warnings.push(format!("{id}: no result after {} turns, kept as abandoned", trace.len()));
                }
                corpus.push(id, trace);
            }
        }
    }
    Ok(corpus)
}
