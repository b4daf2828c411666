use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use persona_core::labeling::{
    aar_label_corpus, corpus_means, parse_questionnaires, questionnaire_labels, questionnaire_scores, LabelProvenance,
    LabelRecord, LabelSet, QuestionnaireResponse, QuestionnaireScores,
};
use persona_core::personas::{PersonaAgent, PersonaSpec, PlanBudget, PlanCache};
use persona_core::trace::TraceSource;

use crate::corpus::Corpus;
use crate::PipelineError;

/// Labels the generating persona of every synthetic trace.
pub fn known_labels(corpus: &Corpus) -> Result<Vec<LabelRecord>, PipelineError> {
    corpus
        .ids
        .iter()
        .zip(&corpus.traces)
        .map(|(id, t)| match t.persona() {
            Some(kind) => Ok(LabelRecord {
                trace_id: id.clone(),
                labels: LabelSet::only(kind),
                scores: LabelSet::only(kind).flags().map(|b| if b { 1.0 } else { 0.0 }),
                provenance: LabelProvenance::Known,
            }),
            None => Err(PipelineError::Stage { stage: "label", message: format!("{id} is not a synthetic trace") }),
        })
        .collect()
}

/// Action-agreement labels. With a node budget the personas share a plan
/// cache, which leaves the labels unchanged.
pub fn aar_corpus_labels(
    corpus: &Corpus,
    personas: &[PersonaSpec],
    budget: PlanBudget,
) -> Result<Vec<LabelRecord>, PipelineError> {
    let cache = Arc::new(PlanCache::new());
    let agents: Vec<PersonaAgent> = personas
        .iter()
        .map(|s| {
            let a = PersonaAgent::new(*s, budget);
            if budget.is_deterministic() {
                a.with_cache(cache.clone())
            } else {
                a
            }
        })
        .collect();
    let results = aar_label_corpus(&corpus.traces, &agents)
        .map_err(|e| PipelineError::Stage { stage: "label", message: e.to_string() })?;
    Ok(corpus
        .ids
        .iter()
        .zip(results)
        .map(|(id, (labels, report))| LabelRecord {
            trace_id: id.clone(),
            labels,
            scores: report.ratios(),
            provenance: LabelProvenance::Aar { budget, personas: personas.to_vec() },
        })
        .collect())
}

pub fn read_questionnaire_file(path: &Path) -> Result<Vec<QuestionnaireResponse>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
    parse_questionnaires(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
}

pub fn read_means_file(path: &Path) -> Result<QuestionnaireScores, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
}

/// Corpus means over every response.
pub fn questionnaire_means(responses: &[QuestionnaireResponse]) -> Result<QuestionnaireScores, PipelineError> {
    let scores = responses
        .iter()
        .map(questionnaire_scores)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| PipelineError::Stage { stage: "label", message: e.to_string() })?;
    corpus_means(&scores).map_err(|e| PipelineError::Stage { stage: "label", message: e.to_string() })
}

/// Self-perceived labels: each human trace takes the labels of the
/// questionnaire whose respondent id equals the trace's session id.
pub fn questionnaire_corpus_labels(
    corpus: &Corpus,
    responses: &[QuestionnaireResponse],
    means: &QuestionnaireScores,
) -> Result<Vec<LabelRecord>, PipelineError> {
    let stage = |message: String| PipelineError::Stage { stage: "label", message };
    let by_id: HashMap<&str, &QuestionnaireResponse> = responses.iter().map(|r| (r.respondent.as_str(), r)).collect();
    corpus
        .ids
        .iter()
        .zip(&corpus.traces)
        .map(|(id, t)| {
            let TraceSource::Human(session) = &t.source else {
                return Err(stage(format!("{id} is not a human trace")));
            };
            let resp = by_id.get(session.as_str()).ok_or_else(|| stage(format!("no questionnaire for session {session}")))?;
            let scores = questionnaire_scores(resp).map_err(|e| stage(e.to_string()))?;
            Ok(LabelRecord {
                trace_id: id.clone(),
                labels: questionnaire_labels(&scores, means),
                scores: scores.to_array(),
                provenance: LabelProvenance::Questionnaire { means: means.to_array() },
            })
        })
        .collect()
}
