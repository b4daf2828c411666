use std::time::Instant;

use persona_core::labeling::aar_labels;
use persona_core::learn::SvmModel;
use persona_core::personas::{PersonaSpec, PlanBudget};
use persona_core::trace::{mechanic_frequencies, Playtrace};
use serde::{Deserialize, Serialize};

use crate::PipelineError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub aar_seconds_per_trace: f64,
    pub svm_seconds_per_trace: f64,
    pub speedup_ratio: f64,
    pub trace_count: usize,
    /// Per-move planning budget the labeler used.
    pub budget: PlanBudget,
}

pub fn speedup(aar_seconds: f64, svm_seconds: f64) -> f64 {
    aar_seconds / svm_seconds
}

/// Repeats the inference pass until at least this long has elapsed, so the
/// per-trace time is above timer resolution.
const MIN_INFERENCE_SECONDS: f64 = 0.05;

/// Times both labeling paths over the same traces, one after the other.
/// The AAR path replans all three personas at every recorded turn; the
/// frequency path counts mechanics and runs the classifier.
pub fn bench_aar_vs_inference(
    traces: &[Playtrace],
    budget: PlanBudget,
    model: &SvmModel,
) -> Result<BenchReport, PipelineError> {
    if traces.is_empty() {
        return Err(PipelineError::Config("benchmark needs at least one trace".into()));
    }
    let personas = PersonaSpec::all_default();
    let start = Instant::now();
    for t in traces {
        aar_labels(t, &personas, budget).map_err(|e| PipelineError::Stage { stage: "bench", message: e.to_string() })?;
    }
    let aar = start.elapsed().as_secs_f64() / traces.len() as f64;

    let start = Instant::now();
    let mut rounds = 0usize;
    while rounds == 0 || start.elapsed().as_secs_f64() < MIN_INFERENCE_SECONDS {
        for t in traces {
            let v = mechanic_frequencies(t);
            std::hint::black_box(model.predict_raw(&v).map_err(|e| PipelineError::Stage { stage: "bench", message: e.to_string() })?);
        }
        rounds += 1;
    }
    let svm = start.elapsed().as_secs_f64() / (rounds * traces.len()) as f64;
    Ok(BenchReport {
        aar_seconds_per_trace: aar,
        svm_seconds_per_trace: svm,
        speedup_ratio: speedup(aar, svm),
        trace_count: traces.len(),
        budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_is_aar_over_svm() {
        assert_eq!(speedup(40.0, 0.4), 100.0);
    }
}
