use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use persona_core::labeling::QuestionnaireResponse;
use persona_core::trace::{append_traces, read_traces, Playtrace, TraceOutcome};
use serde::{Deserialize, Serialize};

use crate::error::{ApiError, ErrorCode};

/// Where a finished session's trace lives: a daily trace file and the
/// trace's ordinal within it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRef {
    pub session: String,
    pub file: String,
    pub position: usize,
    pub map: String,
    pub outcome: TraceOutcome,
    pub turns: usize,
}

/// Append-only storage under one directory: `traces-YYYY-MM-DD.jsonl`
/// files, an `index.jsonl` of [`TraceRef`]s and `questionnaires.csv` in the
/// format the labeling tools read.
#[derive(Debug)]
pub struct TraceStore {
    dir: PathBuf,
    lock: Mutex<()>,
}

pub const INDEX_FILE: &str = "index.jsonl";
pub const QUESTIONNAIRE_FILE: &str = "questionnaires.csv";

fn storage(e: impl std::fmt::Display) -> ApiError {
    ApiError::new(ErrorCode::Storage, e.to_string())
}

impl TraceStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, ApiError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(storage)?;
        Ok(Self { dir, lock: Mutex::new(()) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn persist(&self, session: &str, trace: &Playtrace, day: &str) -> Result<TraceRef, ApiError> {
        let _guard = self.lock.lock().expect("store lock");
        let file = format!("traces-{day}.jsonl");
        let path = self.dir.join(&file);
        let position = if path.exists() { read_traces(&path).map_err(storage)?.len() } else { 0 };
        append_traces(&path, std::slice::from_ref(trace)).map_err(storage)?;
        let r = TraceRef {
            session: session.to_string(),
            file,
            position,
            map: trace.map_name.clone(),
            outcome: trace.outcome,
            turns: trace.len(),
        };
        let mut index = OpenOptions::new().create(true).append(true).open(self.dir.join(INDEX_FILE)).map_err(storage)?;
        writeln!(index, "{}", serde_json::to_string(&r).map_err(storage)?).map_err(storage)?;
        Ok(r)
    }

    pub fn index(&self) -> Result<Vec<TraceRef>, ApiError> {
        let path = self.dir.join(INDEX_FILE);
        if !path.exists() {
            return Ok(Vec::new());
        }
        fs::read_to_string(path)
            .map_err(storage)?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(storage))
            .collect()
    }

    pub fn load(&self, r: &TraceRef) -> Result<Playtrace, ApiError> {
        let traces = read_traces(&self.dir.join(&r.file)).map_err(storage)?;
        traces.into_iter().nth(r.position).ok_or_else(|| storage(format!("{} has no trace {}", r.file, r.position)))
    }

    pub fn record_questionnaire(&self, resp: &QuestionnaireResponse) -> Result<(), ApiError> {
        let _guard = self.lock.lock().expect("store lock");
        let mut f =
            OpenOptions::new().create(true).append(true).open(self.dir.join(QUESTIONNAIRE_FILE)).map_err(storage)?;
        let answers: Vec<String> = (1..=10).map(|q| resp.question(q).to_string()).collect();
        writeln!(f, "{},{}", resp.respondent, answers.join(",")).map_err(storage)
    }
}
