use std::io::Write;

use serde::{Deserialize, Serialize};

use super::Playtrace;
use crate::engine::{MechanicKind, MECHANIC_COUNT};

/// Per-mechanic trigger counts over one trace, optionally max-normalized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: [f64; MECHANIC_COUNT],
    pub normalized: bool,
}

impl Default for FeatureVector {
    fn default() -> Self {
        Self { values: [0.0; MECHANIC_COUNT], normalized: false }
    }
}

impl FeatureVector {
    pub fn raw(values: [f64; MECHANIC_COUNT]) -> Self {
        Self { values, normalized: false }
    }

    pub fn get(&self, kind: MechanicKind) -> f64 {
        self.values[kind.index()]
    }

    /// Counts one more event; used for running totals in live sessions.
    pub fn add(&mut self, kind: MechanicKind) {
        debug_assert!(!self.normalized);
        self.values[kind.index()] += 1.0;
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

pub fn mechanic_frequencies(trace: &Playtrace) -> FeatureVector {
    let mut v = FeatureVector::default();
    for e in trace.events() {
        v.add(e.kind);
    }
    v
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FeatureError {
    #[error("feature vector is already normalized")]
    AlreadyNormalized,
    #[error("cannot fit a normalizer on an empty dataset")]
    EmptyDataset,
    #[error("feature vector is not normalized")]
    NotNormalized,
    #[error("csv export failed: {0}")]
    Csv(String),
}

/// Per-mechanic maxima of the training set, clamped to at least 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub max: [f64; MECHANIC_COUNT],
}

impl Normalizer {
    pub fn fit<'a>(dataset: impl IntoIterator<Item = &'a FeatureVector>) -> Result<Self, FeatureError> {
        let mut max = [1.0f64; MECHANIC_COUNT];
        let mut seen = false;
        for v in dataset {
            if v.normalized {
                return Err(FeatureError::AlreadyNormalized);
            }
            seen = true;
            for (m, x) in max.iter_mut().zip(v.values) {
                *m = m.max(x);
            }
        }
        if !seen {
            return Err(FeatureError::EmptyDataset);
        }
        Ok(Self { max })
    }

    /// Divides by the fitted maxima. Values above the training maximum stay
    /// above 1.
    pub fn apply(&self, v: &FeatureVector) -> Result<FeatureVector, FeatureError> {
        if v.normalized {
            return Err(FeatureError::AlreadyNormalized);
        }
        let mut out = [0.0; MECHANIC_COUNT];
        for i in 0..MECHANIC_COUNT {
            out[i] = v.values[i] / self.max[i];
        }
        Ok(FeatureVector { values: out, normalized: true })
    }
}

pub const FEATURE_COLUMNS: [&str; MECHANIC_COUNT] = {
    let mut names = [""; MECHANIC_COUNT];
    let mut i = 0;
    while i < MECHANIC_COUNT {
        names[i] = MechanicKind::ALL[i].name();
        i += 1;
    }
    names
};

/// One CSV row: an id, the 17 features and optional persona flags in
/// runner, treasure collector, monster killer order.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureRow {
    pub id: String,
    pub features: FeatureVector,
    pub labels: Option<[bool; 3]>,
}

pub fn write_features_csv<W: Write>(out: W, rows: &[FeatureRow]) -> Result<(), FeatureError> {
    let err = |e: csv::Error| FeatureError::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    let with_labels = rows.iter().any(|r| r.labels.is_some());
    let mut header = vec!["id"];
    header.extend(FEATURE_COLUMNS);
    if with_labels {
        header.extend(["runner", "treasure_collector", "monster_killer"]);
    }
    w.write_record(&header).map_err(err)?;
    for row in rows {
        let mut rec = vec![row.id.clone()];
        rec.extend(row.features.values.iter().map(|v| v.to_string()));
        if with_labels {
            let l = row.labels.unwrap_or_default();
            rec.extend(l.iter().map(|b| u8::from(*b).to_string()));
        }
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| FeatureError::Csv(e.to_string()))
}
