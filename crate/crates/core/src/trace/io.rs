//! JSON-lines trace files. Each trace is a header line followed by one line
//! per turn; a file may hold any number of traces back to back.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Playtrace, TraceOutcome, TraceSource, TurnRecord};
use crate::engine::StateSnapshot;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Line {
    Header {
        map_name: String,
        source: TraceSource,
        map_text: String,
        initial_state: StateSnapshot,
        turn_count: usize,
        outcome: TraceOutcome,
    },
    Turn(TurnRecord),
}

pub fn write_traces_to<W: Write>(mut out: W, traces: &[Playtrace]) -> Result<(), IoError> {
    for t in traces {
        let header = Line::Header {
            map_name: t.map_name.clone(),
            source: t.source.clone(),
            map_text: t.map_text.clone(),
            initial_state: t.initial_state.clone(),
            turn_count: t.turns.len(),
            outcome: t.outcome,
        };
        serde_json::to_writer(&mut out, &header).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
        for turn in &t.turns {
            serde_json::to_writer(&mut out, &Line::Turn(turn.clone())).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Writes `traces`, replacing the file.
pub fn write_traces(path: &Path, traces: &[Playtrace]) -> Result<(), IoError> {
    write_traces_to(BufWriter::new(File::create(path)?), traces)
}

/// Appends `traces` to the file, creating it if needed.
pub fn append_traces(path: &Path, traces: &[Playtrace]) -> Result<(), IoError> {
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    write_traces_to(BufWriter::new(file), traces)
}

pub fn read_traces_from<R: BufRead>(input: R) -> Result<Vec<Playtrace>, IoError> {
    let mut traces = Vec::new();
    let mut pending: Option<(Playtrace, usize)> = None;
    let mut last_line = 0;
    for (i, line) in input.lines().enumerate() {
        let n = i + 1;
        last_line = n;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line =
            serde_json::from_str(&line).map_err(|e| IoError::Malformed { line: n, message: e.to_string() })?;
        match parsed {
            Line::Header { map_name, source, map_text, initial_state, turn_count, outcome } => {
                if let Some((t, want)) = &pending {
                    return Err(IoError::Malformed {
                        line: n,
                        message: format!("new trace header after {} of {want} turns", t.turns.len()),
                    });
                }
                let trace = Playtrace { map_name, source, map_text, initial_state, turns: Vec::new(), outcome };
                if turn_count == 0 {
                    traces.push(trace);
                } else {
                    pending = Some((trace, turn_count));
                }
            }
            Line::Turn(turn) => {
                let Some((t, want)) = pending.as_mut() else {
                    return Err(IoError::Malformed { line: n, message: "turn record without header".into() });
                };
                t.turns.push(turn);
                if t.turns.len() == *want {
                    traces.push(pending.take().expect("pending trace").0);
                }
            }
        }
    }
    if let Some((t, want)) = pending {
        return Err(IoError::Malformed {
            line: last_line,
            message: format!("trace truncated after {} of {want} turns", t.turns.len()),
        });
    }
    Ok(traces)
}

pub fn read_traces(path: &Path) -> Result<Vec<Playtrace>, IoError> {
    read_traces_from(BufReader::new(File::open(path)?))
}
