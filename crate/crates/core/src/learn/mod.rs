//! Multilabel persona classifiers trained from scratch: a support vector
//! machine over mechanic frequencies and an LSTM over cropped sequences.

mod lstm;
mod svm;

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::labeling::LabelSet;
use crate::personas::PersonaKind;

pub use lstm::{
    bce_loss, lstm_forward, lstm_forward_inputs, train_lstm, train_lstm_replicas, LstmConfig, LstmGradients,
    LstmModel, LstmParams,
};
pub use svm::{
    sigmoid, svm_predict, train_binary_svm, train_svm, BinarySvm, BinaryTraining, Kernel, SupportVector, SvmConfig,
    SvmModel,
};

/// Version written into every model file.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LearnError {
    #[error("dataset is too small: {0}")]
    EmptyDataset(String),
    #[error("split ratio {0} must lie strictly between 0 and 1")]
    InvalidRatio(f64),
    #[error("input is not normalized with the model's normalizer")]
    UnnormalizedInput,
    #[error("sequence has no steps")]
    EmptySequence,
    #[error("expected input of size {expected}, got {got}")]
    InputSize { expected: usize, got: usize },
    #[error("{inputs} inputs but {labels} label sets")]
    LengthMismatch { inputs: usize, labels: usize },
    #[error("training diverged for seed {seed} at epoch {epoch}")]
    Diverged { seed: u64, epoch: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model file: {0}")]
    ModelFile(String),
}

/// Indices of a dataset partition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Stratified split by label combination. The training side gets
/// `round(n * ratio)` items, clamped so both sides are nonempty; each
/// combination receives the floor or ceiling of its proportional share.
pub fn split_dataset(labels: &[LabelSet], ratio: f64, seed: u64) -> Result<Split, LearnError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(LearnError::InvalidRatio(ratio));
    }
    let n = labels.len();
    if n < 2 {
        return Err(LearnError::EmptyDataset(format!("need at least 2 items to split, got {n}")));
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); LabelSet::ALL_COMBINATIONS.len()];
    for (i, l) in labels.iter().enumerate() {
        groups[l.combination_index()].push(i);
    }
    let target = ((n as f64 * ratio).round() as usize).clamp(1, n - 1);
    let quotas: Vec<f64> = groups.iter().map(|g| g.len() as f64 * target as f64 / n as f64).collect();
    let mut take: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..groups.len()).filter(|g| !groups[*g].is_empty()).collect();
    order.sort_by(|a, b| (quotas[*b] - quotas[*b].floor()).total_cmp(&(quotas[*a] - quotas[*a].floor())).then(a.cmp(b)));
    let mut missing = target - take.iter().sum::<usize>();
    for g in order.iter().cycle() {
        if missing == 0 {
            break;
        }
        if take[*g] < groups[*g].len() {
            take[*g] += 1;
            missing -= 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = Split { train: Vec::with_capacity(target), validation: Vec::with_capacity(n - target) };
    for (g, members) in groups.iter_mut().enumerate() {
        members.shuffle(&mut rng);
        split.train.extend_from_slice(&members[..take[g]]);
        split.validation.extend_from_slice(&members[take[g]..]);
    }
    split.train.sort_unstable();
    split.validation.sort_unstable();
    Ok(split)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    Train,
    Validation,
    Test,
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitName::Train => "train",
            SplitName::Validation => "validation",
            SplitName::Test => "test",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            (self.tp + self.tn) as f64 / self.total() as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub split: SplitName,
    pub count: usize,
    /// Share of items whose whole predicted label set is correct.
    pub exact_match: f64,
    /// Accuracy per persona in label order.
    pub per_label: [f64; 3],
    pub confusion: [Confusion; 3],
}

pub fn evaluate(predicted: &[LabelSet], truth: &[LabelSet], split: SplitName) -> Result<EvalReport, LearnError> {
    if predicted.len() != truth.len() {
        return Err(LearnError::LengthMismatch { inputs: predicted.len(), labels: truth.len() });
    }
    let mut confusion = [Confusion::default(); 3];
    let mut exact = 0;
    for (p, t) in predicted.iter().zip(truth) {
        if p == t {
            exact += 1;
        }
        for (k, c) in confusion.iter_mut().enumerate() {
            match (p.flags()[k], t.flags()[k]) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
    }
    let n = truth.len();
    Ok(EvalReport {
        split,
        count: n,
        exact_match: if n == 0 { 0.0 } else { exact as f64 / n as f64 },
        per_label: confusion.map(|c| c.accuracy()),
        confusion,
    })
}

/// Labels from independent per-persona probabilities, threshold 0.5.
pub fn labels_from_probabilities(p: [f64; 3]) -> LabelSet {
    LabelSet::above(p, [0.5; 3])
}

/// Binary targets in label order.
pub fn targets(labels: LabelSet) -> [f64; 3] {
    labels.flags().map(|b| if b { 1.0 } else { 0.0 })
}

/// Mean and sample standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: 0.0, std: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Self { mean, std }
    }
}

impl fmt::Display for MeanStd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} ± {:.3}", self.mean, self.std)
    }
}

/// Persona name for each label position.
pub fn label_names() -> [&'static str; 3] {
    PersonaKind::ALL.map(PersonaKind::name)
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    version: u32,
    model: T,
}

pub(crate) fn to_model_file<T: Serialize>(format: &str, model: &T) -> Result<String, LearnError> {
    serde_json::to_string_pretty(&Envelope { format: format.to_string(), version: MODEL_FORMAT_VERSION, model })
        .map_err(|e| LearnError::ModelFile(e.to_string()))
}

pub(crate) fn from_model_file<T: for<'de> Deserialize<'de>>(format: &str, text: &str) -> Result<T, LearnError> {
    let env: Envelope<serde_json::Value> = serde_json::from_str(text).map_err(|e| LearnError::ModelFile(e.to_string()))?;
    if env.format != format {
        return Err(LearnError::ModelFile(format!("expected a {format} model, found {}", env.format)));
    }
    if env.version != MODEL_FORMAT_VERSION {
        return Err(LearnError::ModelFile(format!("unsupported model version {}", env.version)));
    }
    serde_json::from_value(env.model).map_err(|e| LearnError::ModelFile(e.to_string()))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn ls(bits: u8) -> LabelSet {
        LabelSet::from_flags([bits & 1 != 0, bits & 2 != 0, bits & 4 != 0])
    }

    #[test]
    fn ten_items_split_seven_three() {
        let labels = vec![ls(1); 10];
        let s = split_dataset(&labels, 0.7, 1).unwrap();
        assert_eq!((s.train.len(), s.validation.len()), (7, 3));
        assert_eq!(s, split_dataset(&labels, 0.7, 1).unwrap());
        assert_ne!(s, split_dataset(&labels, 0.7, 2).unwrap());
    }

    #[test]
    fn split_errors() {
        assert!(matches!(split_dataset(&[ls(0)], 0.7, 0), Err(LearnError::EmptyDataset(_))));
        assert_eq!(split_dataset(&[ls(0); 4], 1.0, 0), Err(LearnError::InvalidRatio(1.0)));
        let s = split_dataset(&[ls(0), ls(1)], 0.7, 0).unwrap();
        assert_eq!((s.train.len(), s.validation.len()), (1, 1));
    }

    #[test]
    fn evaluation_counts() {
        let truth = [ls(1), ls(2), ls(3), ls(0)];
        let all = evaluate(&truth, &truth, SplitName::Train).unwrap();
        assert_eq!((all.exact_match, all.per_label), (1.0, [1.0; 3]));
        let flipped: Vec<LabelSet> = truth.iter().map(|l| LabelSet::from_flags(l.flags().map(|b| !b))).collect();
        let none = evaluate(&flipped, &truth, SplitName::Test).unwrap();
        assert_eq!((none.exact_match, none.per_label), (0.0, [0.0; 3]));
        // Hand count: item 0 exact; item 1 misses MK; item 2 misses TC; item 3 exact.
        let pred = [ls(1), ls(6), ls(1), ls(0)];
        let r = evaluate(&pred, &truth, SplitName::Validation).unwrap();
        assert_eq!(r.exact_match, 0.5);
        assert_eq!(r.per_label, [1.0, 0.75, 0.75]);
        assert_eq!(r.confusion[1], Confusion { tp: 1, fp: 0, tn: 2, fn_: 1 });
        assert_eq!(r.confusion[2], Confusion { tp: 0, fp: 1, tn: 3, fn_: 0 });
    }

    #[test]
    fn mean_std_is_sample_std() {
        let m = MeanStd::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(MeanStd::of(&[7.0]).std, 0.0);
    }

    proptest! {
        #[test]
        fn split_is_a_stratified_partition(bits in proptest::collection::vec(0u8..8, 2..80), seed in 0u64..1000) {
            let labels: Vec<LabelSet> = bits.iter().map(|b| ls(*b)).collect();
            let s = split_dataset(&labels, 0.7, seed).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.validation).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
            prop_assert!(!s.train.is_empty() && !s.validation.is_empty());
            // Counting oracle: each combination lands within one of 70 %.
            let n = labels.len();
            let target = ((n as f64 * 0.7).round() as usize).clamp(1, n - 1);
            prop_assert_eq!(s.train.len(), target);
            for combo in LabelSet::ALL_COMBINATIONS {
                let members = labels.iter().filter(|l| **l == combo).count();
                let in_train = s.train.iter().filter(|i| labels[**i] == combo).count();
                let share = members as f64 * target as f64 / n as f64;
                prop_assert!((in_train as f64 - share).abs() < 1.0 + 1e-9, "{} of {} vs {}", in_train, members, share);
            }
        }
    }

    #[test]
    fn ten_member_combination_gets_seven() {
        let mut labels = vec![ls(1); 10];
        labels.extend(vec![ls(2); 13]);
        labels.extend(vec![ls(7); 4]);
        for seed in 0..20 {
            let s = split_dataset(&labels, 0.7, seed).unwrap();
            let r = s.train.iter().filter(|i| labels[**i] == ls(1)).count();
            assert!((6..=8).contains(&r), "seed {seed}: {r}");
        }
    }
}
