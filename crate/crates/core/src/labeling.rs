//! Ground-truth persona labels: action agreement against persona agents, and
//! self-perceived labels from the ten-question survey.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::personas::{PersonaAgent, PersonaKind, PersonaSpec, PlanBudget, PlanError};
use crate::trace::{Playtrace, TraceError};

/// A persona is assigned when strictly more than this share of moves agree.
pub const AAR_THRESHOLD: f64 = 0.5;

/// Multilabel persona assignment. Any of the eight combinations is valid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LabelSet {
    pub runner: bool,
    pub treasure_collector: bool,
    pub monster_killer: bool,
}

impl LabelSet {
    pub const EMPTY: LabelSet = LabelSet { runner: false, treasure_collector: false, monster_killer: false };

    /// Flags in runner, treasure collector, monster killer order.
    pub fn from_flags(flags: [bool; 3]) -> Self {
        Self { runner: flags[0], treasure_collector: flags[1], monster_killer: flags[2] }
    }

    pub fn flags(self) -> [bool; 3] {
        [self.runner, self.treasure_collector, self.monster_killer]
    }

    pub fn only(kind: PersonaKind) -> Self {
        let mut s = Self::EMPTY;
        s.set(kind, true);
        s
    }

    pub fn get(self, kind: PersonaKind) -> bool {
        self.flags()[kind.label_index()]
    }

    pub fn set(&mut self, kind: PersonaKind, value: bool) {
        let mut f = self.flags();
        f[kind.label_index()] = value;
        *self = Self::from_flags(f);
    }

    pub fn is_empty(self) -> bool {
        self == Self::EMPTY
    }

    pub fn len(self) -> usize {
        self.flags().iter().filter(|b| **b).count()
    }

    /// Position in [`LabelSet::ALL_COMBINATIONS`].
    pub fn combination_index(self) -> usize {
        Self::ALL_COMBINATIONS.iter().position(|c| *c == self).expect("all combinations listed")
    }

    /// Table order: no label, the three pure personas, pairs, then all three.
    pub const ALL_COMBINATIONS: [LabelSet; 8] = [
        LabelSet { runner: false, treasure_collector: false, monster_killer: false },
        LabelSet { runner: true, treasure_collector: false, monster_killer: false },
        LabelSet { runner: false, treasure_collector: true, monster_killer: false },
        LabelSet { runner: false, treasure_collector: false, monster_killer: true },
        LabelSet { runner: true, treasure_collector: true, monster_killer: false },
        LabelSet { runner: true, treasure_collector: false, monster_killer: true },
        LabelSet { runner: false, treasure_collector: true, monster_killer: true },
        LabelSet { runner: true, treasure_collector: true, monster_killer: true },
    ];

    /// Flag set iff the matching value is strictly above its threshold.
    pub fn above(values: [f64; 3], thresholds: [f64; 3]) -> Self {
        Self::from_flags([values[0] > thresholds[0], values[1] > thresholds[1], values[2] > thresholds[2]])
    }

    pub fn row_name(self) -> String {
        if self.is_empty() {
            return "No Label".into();
        }
        let parts: Vec<&str> = PersonaKind::ALL.iter().filter(|k| self.get(**k)).map(|k| k.short()).collect();
        if parts.len() == 1 {
            format!("Pure {}", parts[0])
        } else {
            parts.join(" & ")
        }
    }
}

impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.row_name())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LabelError {
    #[error("trace has no turns")]
    EmptyTrace,
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("persona {0} appears more than once")]
    DuplicatePersona(PersonaKind),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub agreed: usize,
    pub total: usize,
    pub ratio: f64,
}

impl Agreement {
    pub fn new(agreed: usize, total: usize) -> Self {
        let ratio = if total == 0 { 0.0 } else { agreed as f64 / total as f64 };
        Self { agreed, total, ratio }
    }
}

/// Agreement of each persona with one trace, in label order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub per_persona: Vec<(PersonaKind, Agreement)>,
}

impl AgreementReport {
    pub fn get(&self, kind: PersonaKind) -> Option<Agreement> {
        self.per_persona.iter().find(|(k, _)| *k == kind).map(|(_, a)| *a)
    }

    /// Ratios in label order; personas that were not scored read as 0.
    pub fn ratios(&self) -> [f64; 3] {
        PersonaKind::ALL.map(|k| self.get(k).map_or(0.0, |a| a.ratio))
    }

    pub fn labels(&self) -> LabelSet {
        LabelSet::above(self.ratios(), [AAR_THRESHOLD; 3])
    }
}

/// Replays `trace` and asks `agent` for its move at every recorded
/// pre-action state. Moves match by direction, throws by target tile.
pub fn agreement_with(trace: &Playtrace, agent: &PersonaAgent) -> Result<Agreement, LabelError> {
    if trace.is_empty() {
        return Err(LabelError::EmptyTrace);
    }
    let states = trace.replay()?;
    let mut agreed = 0;
    for (state, turn) in states.iter().zip(&trace.turns) {
        if agent.plan(state)? == turn.action {
            agreed += 1;
        }
    }
    Ok(Agreement::new(agreed, trace.len()))
}

pub fn action_agreement(trace: &Playtrace, spec: &PersonaSpec, budget: PlanBudget) -> Result<Agreement, LabelError> {
    agreement_with(trace, &PersonaAgent::new(*spec, budget))
}

/// Scores `trace` against each agent and labels it with every persona whose
/// ratio exceeds [`AAR_THRESHOLD`].
pub fn aar_labels_with(trace: &Playtrace, agents: &[PersonaAgent]) -> Result<(LabelSet, AgreementReport), LabelError> {
    let mut per_persona: Vec<(PersonaKind, Agreement)> = Vec::with_capacity(agents.len());
    for agent in agents {
        if per_persona.iter().any(|(k, _)| *k == agent.spec.kind) {
            return Err(LabelError::DuplicatePersona(agent.spec.kind));
        }
        per_persona.push((agent.spec.kind, agreement_with(trace, agent)?));
    }
    per_persona.sort_by_key(|(k, _)| k.label_index());
    let report = AgreementReport { per_persona };
    Ok((report.labels(), report))
}

pub fn aar_labels(
    trace: &Playtrace,
    personas: &[PersonaSpec],
    budget: PlanBudget,
) -> Result<(LabelSet, AgreementReport), LabelError> {
    let agents: Vec<PersonaAgent> = personas.iter().map(|s| PersonaAgent::new(*s, budget)).collect();
    aar_labels_with(trace, &agents)
}

/// Labels a whole corpus, one trace per task. Output order matches input.
pub fn aar_label_corpus(
    traces: &[Playtrace],
    agents: &[PersonaAgent],
) -> Result<Vec<(LabelSet, AgreementReport)>, LabelError> {
    traces.par_iter().map(|t| aar_labels_with(t, agents)).collect()
}

/// How a label was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "labeler", rename_all = "snake_case")]
pub enum LabelProvenance {
    Aar { budget: PlanBudget, personas: Vec<PersonaSpec> },
    Questionnaire { means: [f64; 3] },
    Known,
}

/// One line of a label file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub trace_id: String,
    pub labels: LabelSet,
    /// Agreement ratios or questionnaire scores, in label order.
    pub scores: [f64; 3],
    pub provenance: LabelProvenance,
}

pub fn write_label_records<W: Write>(mut out: W, records: &[LabelRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_label_records<R: BufRead>(input: R) -> Result<Vec<LabelRecord>, ParseError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| ParseError { line: i + 1, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| ParseError { line: i + 1, message: e.to_string() })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

pub const ANSWER_MAX: u8 = 4;

/// Answers to the ten survey questions, 0 = never up to 4 = always.
/// Question 1 asks how often the respondent plays; 2 to 10 probe personas.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionnaireResponse {
    pub respondent: String,
    pub play_frequency: u8,
    pub answers: [u8; 9],
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QuestionnaireError {
    #[error("question {question}: answer {value} is outside 0..=4")]
    OutOfRange { question: usize, value: i64 },
    #[error("expected 10 answers, got {0}")]
    WrongCount(usize),
    #[error("answer {0:?} is not an integer")]
    NotAnInteger(String),
    #[error("missing respondent id")]
    MissingId,
    #[error("no responses")]
    EmptyCorpus,
}

impl QuestionnaireResponse {
    /// Validates ten answers, question 1 first.
    pub fn new(respondent: impl Into<String>, answers: &[i64]) -> Result<Self, QuestionnaireError> {
        if answers.len() != 10 {
            return Err(QuestionnaireError::WrongCount(answers.len()));
        }
        let mut out = [0u8; 10];
        for (i, &v) in answers.iter().enumerate() {
            if !(0..=i64::from(ANSWER_MAX)).contains(&v) {
                return Err(QuestionnaireError::OutOfRange { question: i + 1, value: v });
            }
            out[i] = v as u8;
        }
        let mut persona = [0u8; 9];
        persona.copy_from_slice(&out[1..]);
        Ok(Self { respondent: respondent.into(), play_frequency: out[0], answers: persona })
    }

    /// Answer to question `q`, numbered 1 to 10.
    pub fn question(&self, q: usize) -> u8 {
        assert!((1..=10).contains(&q), "question {q} out of range");
        if q == 1 {
            self.play_frequency
        } else {
            self.answers[q - 2]
        }
    }

    pub fn validate(&self) -> Result<(), QuestionnaireError> {
        for q in 1..=10 {
            let v = self.question(q);
            if v > ANSWER_MAX {
                return Err(QuestionnaireError::OutOfRange { question: q, value: i64::from(v) });
            }
        }
        Ok(())
    }
}

impl FromStr for QuestionnaireResponse {
    type Err = QuestionnaireError;

    /// `id, a1, a2, ..., a10` with optional whitespace.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut fields = s.split(',').map(str::trim);
        let id = fields.next().filter(|f| !f.is_empty()).ok_or(QuestionnaireError::MissingId)?;
        let answers = fields
            .map(|f| f.parse::<i64>().map_err(|_| QuestionnaireError::NotAnInteger(f.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(id, &answers)
    }
}

/// Questions averaged into each persona score.
pub const RUNNER_QUESTIONS: [usize; 3] = [2, 7, 9];
pub const TREASURE_QUESTIONS: [usize; 3] = [3, 6, 8];
pub const MONSTER_QUESTIONS: [usize; 3] = [4, 5, 10];

/// Self-perceived persona scores in label order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuestionnaireScores {
    pub runner: f64,
    pub treasure_collector: f64,
    pub monster_killer: f64,
}

impl QuestionnaireScores {
    pub fn to_array(self) -> [f64; 3] {
        [self.runner, self.treasure_collector, self.monster_killer]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self { runner: v[0], treasure_collector: v[1], monster_killer: v[2] }
    }
}

pub fn questionnaire_scores(resp: &QuestionnaireResponse) -> Result<QuestionnaireScores, QuestionnaireError> {
    resp.validate()?;
    let mean = |qs: [usize; 3]| qs.iter().map(|q| f64::from(resp.question(*q))).sum::<f64>() / 3.0;
    Ok(QuestionnaireScores {
        runner: mean(RUNNER_QUESTIONS),
        treasure_collector: mean(TREASURE_QUESTIONS),
        monster_killer: mean(MONSTER_QUESTIONS),
    })
}

/// Per-category means over a questionnaire corpus.
pub fn corpus_means(scores: &[QuestionnaireScores]) -> Result<QuestionnaireScores, QuestionnaireError> {
    if scores.is_empty() {
        return Err(QuestionnaireError::EmptyCorpus);
    }
    let mut sum = [0.0; 3];
    for s in scores {
        for (acc, v) in sum.iter_mut().zip(s.to_array()) {
            *acc += v;
        }
    }
    Ok(QuestionnaireScores::from_array(sum.map(|v| v / scores.len() as f64)))
}

/// Flag set iff the score is strictly above the corpus mean.
pub fn questionnaire_labels(scores: &QuestionnaireScores, means: &QuestionnaireScores) -> LabelSet {
    LabelSet::above(scores.to_array(), means.to_array())
}

/// Parses one respondent per non-empty line. Lines starting with `#` are
/// comments.
pub fn parse_questionnaires(text: &str) -> Result<Vec<QuestionnaireResponse>, ParseError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| l.parse().map_err(|e: QuestionnaireError| ParseError { line: i + 1, message: e.to_string() }))
        .collect()
}

#[cfg(test)]
mod tests {
    use std::collections::VecDeque;
    use std::sync::Arc;

    use proptest::prelude::*;

    use super::*;
    use crate::engine::{apply_action, legal_actions, load_map, Action, Direction, GameState, Pos};
    use crate::trace::{record_episode, ScriptedActions, TraceSource};

    fn scripted(map: &str, actions: Vec<Action>) -> Playtrace {
        let level = Arc::new(load_map("t", map).unwrap());
        record_episode(level, TraceSource::Human("t".into()), &mut ScriptedActions::new(actions), 500).unwrap()
    }

    fn moves(dirs: &[Direction]) -> Vec<Action> {
        dirs.iter().copied().map(Action::Move).collect()
    }

    #[test]
    fn ratio_thresholds() {
        let report = |r: [f64; 3]| AgreementReport {
            per_persona: PersonaKind::ALL.iter().zip(r).map(|(k, r)| (*k, Agreement { agreed: 0, total: 1, ratio: r })).collect(),
        };
        assert_eq!(report([1.0, 0.2, 0.3]).labels(), LabelSet::only(PersonaKind::Runner));
        assert_eq!(report([0.5, 0.5, 0.5]).labels(), LabelSet::EMPTY);
        assert_eq!(report([0.8, 0.8, 0.6]).labels(), LabelSet::from_flags([true, true, true]));
        assert_eq!(report([0.5000001, 0.0, 0.0]).labels(), LabelSet::only(PersonaKind::Runner));
    }

    #[test]
    fn half_agreement_is_unlabeled() {
        use Direction::*;
        // The runner always steps east here; half of the recorded moves go west.
        let t = scripted("#############\n#@.........S#\n#############", moves(&[E, W, E, W, E, W, E, W, E, W]));
        assert_eq!(t.len(), 10);
        let budget = PlanBudget::NodeBudget(500);
        let a = action_agreement(&t, &PersonaSpec::new(PersonaKind::Runner), budget).unwrap();
        assert_eq!((a.agreed, a.total, a.ratio), (5, 10, 0.5));
        let (labels, report) = aar_labels(&t, &[PersonaSpec::new(PersonaKind::Runner)], budget).unwrap();
        assert!(!labels.runner);
        assert_eq!(report.get(PersonaKind::Runner).unwrap().ratio, 0.5);
    }

    /// Oracle for a monster-free map: the runner's choice is the first legal
    /// move that starts a shortest path to the exit.
    fn bfs_runner_move(state: &GameState) -> Action {
        let exit = state.level().exit();
        let dist = |from: Pos| -> Option<usize> {
            let mut seen = vec![from];
            let mut q = VecDeque::from([(from, 0)]);
            while let Some((p, d)) = q.pop_front() {
                if p == exit {
                    return Some(d);
                }
                for dir in Direction::ALL {
                    let n = p.step(dir);
                    if state.level().is_floor(n) && !seen.contains(&n) {
                        seen.push(n);
                        q.push_back((n, d + 1));
                    }
                }
            }
            None
        };
        let acts = legal_actions(state).unwrap();
        let best = acts.iter().filter_map(|a| dist(apply_action(state, *a).unwrap().0.hero_pos())).min().unwrap();
        *acts.iter().find(|a| dist(apply_action(state, **a).unwrap().0.hero_pos()) == Some(best)).unwrap()
    }

    #[test]
    fn two_turn_trace_matches_exhaustive_oracle() {
        use Direction::*;
        let t = scripted("@..\n...\n..S", moves(&[E, S]));
        let states = t.replay().unwrap();
        let expected = t.turns.iter().zip(&states).filter(|(turn, s)| bfs_runner_move(s) == turn.action).count();
        let a = action_agreement(&t, &PersonaSpec::new(PersonaKind::Runner), PlanBudget::NodeBudget(5000)).unwrap();
        assert_eq!(a.agreed, expected);
        assert_eq!(a.ratio, expected as f64 / 2.0);
    }

    #[test]
    fn self_agreement_is_total() {
        let level = Arc::new(load_map("t", "#######\n#@.$.g#\n#.#.#.#\n#$.+.S#\n#######").unwrap());
        let budget = PlanBudget::NodeBudget(2000);
        for kind in PersonaKind::ALL {
            let spec = PersonaSpec::new(kind);
            let mut agent = PersonaAgent::new(spec, budget);
            let t = record_episode(level.clone(), TraceSource::Synthetic(kind), &mut agent, 500).unwrap();
            assert_eq!(action_agreement(&t, &spec, budget).unwrap().ratio, 1.0);
            let (labels, report) = aar_labels(&t, &PersonaSpec::all_default(), budget).unwrap();
            assert!(labels.get(kind), "{kind}: {report:?}");
            assert!(report.per_persona.iter().all(|(_, a)| a.total == t.len()));
        }
    }

    #[test]
    fn errors() {
        let t = scripted("@.S", vec![]);
        let spec = PersonaSpec::new(PersonaKind::Runner);
        assert_eq!(action_agreement(&t, &spec, PlanBudget::default()), Err(LabelError::EmptyTrace));
        let mut t = scripted("@..S", moves(&[Direction::E, Direction::E]));
        t.turns[0].state_hash ^= 1;
        assert!(matches!(
            action_agreement(&t, &spec, PlanBudget::default()),
            Err(LabelError::Trace(TraceError::ReplayMismatch { turn: 0, .. }))
        ));
        let t = scripted("@..S", moves(&[Direction::E]));
        assert_eq!(aar_labels(&t, &[spec, spec], PlanBudget::default()), Err(LabelError::DuplicatePersona(spec.kind)));
    }

    #[test]
    fn throws_match_by_target() {
        let t = scripted("g.@.S", vec![Action::ThrowJavelin(Pos::new(0, 0))]);
        let mk = PersonaSpec::new(PersonaKind::MonsterKiller);
        let a = action_agreement(&t, &mk, PlanBudget::NodeBudget(2000)).unwrap();
        let planned = PersonaAgent::new(mk, PlanBudget::NodeBudget(2000)).plan(&t.initial_game_state().unwrap()).unwrap();
        assert_eq!(a.agreed == 1, planned == Action::ThrowJavelin(Pos::new(0, 0)));
    }

    #[test]
    fn corpus_labels_keep_order() {
        let a = scripted("@..S", moves(&[Direction::E, Direction::E, Direction::E]));
        let b = scripted("@..S", moves(&[Direction::E, Direction::W]));
        let agents: Vec<PersonaAgent> =
            PersonaSpec::all_default().iter().map(|s| PersonaAgent::new(*s, PlanBudget::NodeBudget(100))).collect();
        let out = aar_label_corpus(&[a.clone(), b.clone()], &agents).unwrap();
        assert_eq!(out[0], aar_labels_with(&a, &agents).unwrap());
        assert_eq!(out[1], aar_labels_with(&b, &agents).unwrap());
        assert!(out[0].0.runner);
        assert_eq!(out[1].1.get(PersonaKind::Runner).unwrap().agreed, 1);
    }

    #[test]
    fn combination_table() {
        let names: Vec<String> = LabelSet::ALL_COMBINATIONS.iter().map(|c| c.row_name()).collect();
        assert_eq!(names, ["No Label", "Pure R", "Pure TC", "Pure MK", "R & TC", "R & MK", "TC & MK", "R & TC & MK"]);
        for (i, c) in LabelSet::ALL_COMBINATIONS.iter().enumerate() {
            assert_eq!(c.combination_index(), i);
            assert_eq!(LabelSet::from_flags(c.flags()), *c);
        }
    }

    #[test]
    fn questionnaire_examples() {
        let all4 = QuestionnaireResponse::new("a", &[4; 10]).unwrap();
        assert_eq!(questionnaire_scores(&all4).unwrap().to_array(), [4.0, 4.0, 4.0]);
        let r = QuestionnaireResponse::new("b", &[0, 2, 0, 0, 0, 0, 2, 0, 2, 0]).unwrap();
        assert_eq!(questionnaire_scores(&r).unwrap().to_array(), [2.0, 0.0, 0.0]);
        // q1..q10 = 3,1,4,1,0,2,3,4,0,2
        let m = QuestionnaireResponse::new("c", &[3, 1, 4, 1, 0, 2, 3, 4, 0, 2]).unwrap();
        let s = questionnaire_scores(&m).unwrap();
        assert_eq!(s.runner, (1.0 + 3.0 + 0.0) / 3.0);
        assert_eq!(s.treasure_collector, (4.0 + 2.0 + 4.0) / 3.0);
        assert_eq!(s.monster_killer, (1.0 + 0.0 + 2.0) / 3.0);
        assert_eq!(
            QuestionnaireResponse::new("d", &[0, 0, 5, 0, 0, 0, 0, 0, 0, 0]),
            Err(QuestionnaireError::OutOfRange { question: 3, value: 5 })
        );
        assert_eq!(QuestionnaireResponse::new("d", &[0; 9]), Err(QuestionnaireError::WrongCount(9)));
    }

    #[test]
    fn questionnaire_thresholds() {
        let s = QuestionnaireScores::from_array([3.0, 2.5, 1.0]);
        let means = QuestionnaireScores::from_array([2.5, 2.5, 2.0]);
        assert_eq!(questionnaire_labels(&s, &means), LabelSet::only(PersonaKind::Runner));
        let same: Vec<QuestionnaireScores> = (0..5)
            .map(|i| questionnaire_scores(&QuestionnaireResponse::new(format!("p{i}"), &[2, 3, 1, 4, 0, 2, 3, 1, 4, 0]).unwrap()).unwrap())
            .collect();
        let m = corpus_means(&same).unwrap();
        assert!(same.iter().all(|s| questionnaire_labels(s, &m).is_empty()));
        assert_eq!(corpus_means(&[]), Err(QuestionnaireError::EmptyCorpus));
    }

    #[test]
    fn parse_questionnaire_file() {
        let text = "# id, q1..q10\np1, 1,2,3,4,0,1,2,3,4,0\n\np2,0,0,0,0,0,0,0,0,0,4\np3, 1, x\n";
        let err = parse_questionnaires(text).unwrap_err();
        assert_eq!(err.line, 5);
        let ok = parse_questionnaires(&text.replace("p3, 1, x\n", "")).unwrap();
        assert_eq!(ok.len(), 2);
        assert_eq!(ok[0].respondent, "p1");
        assert_eq!(ok[0].question(10), 0);
        assert_eq!(ok[1].question(10), 4);
    }

    #[test]
    fn label_file_round_trip() {
        let recs = vec![
            LabelRecord {
                trace_id: "t0".into(),
                labels: LabelSet::from_flags([true, false, true]),
                scores: [0.9, 0.1, 0.6],
                provenance: LabelProvenance::Aar { budget: PlanBudget::NodeBudget(5000), personas: PersonaSpec::all_default().to_vec() },
            },
            LabelRecord { trace_id: "t1".into(), labels: LabelSet::EMPTY, scores: [1.0; 3], provenance: LabelProvenance::Known },
        ];
        let mut buf = Vec::new();
        write_label_records(&mut buf, &recs).unwrap();
        assert_eq!(read_label_records(&buf[..]).unwrap(), recs);
        assert_eq!(read_label_records(&b"{}\n"[..]).unwrap_err().line, 1);
    }

    proptest! {
        #[test]
        fn means_label_strictly(rows in proptest::collection::vec(proptest::array::uniform10(0i64..=4), 1..20)) {
            let scores: Vec<QuestionnaireScores> = rows
                .iter()
                .enumerate()
                .map(|(i, r)| questionnaire_scores(&QuestionnaireResponse::new(format!("{i}"), r).unwrap()).unwrap())
                .collect();
            let m = corpus_means(&scores).unwrap();
            for s in &scores {
                let l = questionnaire_labels(s, &m);
                for (j, flag) in l.flags().iter().enumerate() {
                    prop_assert_eq!(*flag, s.to_array()[j] > m.to_array()[j]);
                }
            }
        }

        #[test]
        fn agreement_ratio_in_unit_interval(dirs in proptest::collection::vec(0usize..4, 1..15)) {
            let level = Arc::new(load_map("t", "#####\n#@..#\n#.#.#\n#..S#\n#####").unwrap());
            let actions = moves(&dirs.iter().map(|i| Direction::ALL[*i]).collect::<Vec<_>>());
            let t = match record_episode(level, TraceSource::Human("p".into()), &mut ScriptedActions::new(actions), 500) {
                Ok(t) => t,
                Err(crate::trace::RecordError::IllegalAction { partial, .. }) => *partial,
            };
            prop_assume!(!t.is_empty());
            let (labels, report) = aar_labels(&t, &PersonaSpec::all_default(), PlanBudget::NodeBudget(200)).unwrap();
            for (_, a) in &report.per_persona {
                prop_assert!((0.0..=1.0).contains(&a.ratio));
                prop_assert_eq!(a.total, t.len());
            }
            prop_assert_eq!(aar_labels(&t, &PersonaSpec::all_default(), PlanBudget::NodeBudget(200)).unwrap().0, labels);
        }
    }
}
