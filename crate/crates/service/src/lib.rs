//! HTTP session service for live play: serves game state, applies submitted
//! actions on the server, persists finished traces and answers live persona
//! predictions from a loaded model.

mod error;
mod store;
mod view;

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use persona_core::engine::{Action, EngineError, GameState, Level, Outcome};
use persona_core::labeling::{questionnaire_scores, QuestionnaireResponse, QuestionnaireScores};
use persona_core::learn::SvmModel;
use persona_core::trace::{mechanic_frequencies, TraceRecorder, TraceSource};
use serde::{Deserialize, Serialize};

pub use error::{ApiError, ErrorCode};
pub use store::{TraceRef, TraceStore, INDEX_FILE, QUESTIONNAIRE_FILE};
pub use view::{render_glyphs, state_view, ActionResponse, MonsterView, PredictionSnapshot, SessionStatus, StateView};

pub struct LoadedModel {
    pub id: String,
    pub model: SvmModel,
}

impl LoadedModel {
    /// Reads a model file; the id is the file name.
    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let model = SvmModel::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let id = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        Ok(Self { id, model })
    }
}

struct Session {
    recorder: TraceRecorder,
    created_at: String,
    status: SessionStatus,
    persisted: Option<TraceRef>,
    questionnaire: Option<QuestionnaireRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuestionnaireRecord {
    pub response: QuestionnaireResponse,
    pub scores: QuestionnaireScores,
}

pub struct AppState {
    maps: BTreeMap<String, Arc<Level>>,
    sessions: Mutex<HashMap<String, Session>>,
    store: TraceStore,
    model: Option<LoadedModel>,
}

impl AppState {
    pub fn new(maps: Vec<Arc<Level>>, store: TraceStore, model: Option<LoadedModel>) -> Self {
        Self {
            maps: maps.into_iter().map(|l| (l.name().to_string(), l)).collect(),
            sessions: Mutex::new(HashMap::new()),
            store,
            model,
        }
    }

    pub fn store(&self) -> &TraceStore {
        &self.store
    }

    fn with_session<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> Result<T, ApiError>) -> Result<T, ApiError> {
        let mut sessions = self.sessions.lock().expect("session table");
        let s = sessions.get_mut(id).ok_or_else(|| ApiError::new(ErrorCode::UnknownSession, format!("no session {id}")))?;
        f(s)
    }

    fn predict(&self, recorder: &TraceRecorder) -> Option<PredictionSnapshot> {
        let m = self.model.as_ref()?;
        let (_, margins) = m.model.predict_raw(&mechanic_frequencies(recorder.trace())).ok()?;
        Some(PredictionSnapshot {
            probabilities: SvmModel::probabilities(margins),
            based_on_turns: recorder.trace().len(),
            model_id: m.id.clone(),
        })
    }
}

pub type SharedState = Arc<AppState>;

pub fn router(state: SharedState) -> Router {
    Router::new()
        .route("/api/maps", get(list_maps))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/actions", post(submit_action))
        .route("/api/sessions/{id}/prediction", get(get_prediction))
        .route("/api/sessions/{id}/finish", post(finish_session))
        .route("/api/sessions/{id}/questionnaire", post(submit_questionnaire).get(get_questionnaire))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, state: SharedState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}

/// Store directory, shipped maps plus extra map files, optional model file.
pub fn build_state(data_dir: PathBuf, maps: Vec<Arc<Level>>, model: Option<&Path>) -> Result<SharedState, String> {
    let store = TraceStore::open(data_dir).map_err(|e| e.to_string())?;
    let model = model.map(LoadedModel::from_file).transpose()?;
    Ok(Arc::new(AppState::new(maps, store, model)))
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload.map(|Json(v)| v).map_err(|e| ApiError::new(ErrorCode::MalformedRequest, e.body_text()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapInfo {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub glyphs: Vec<String>,
}

async fn list_maps(State(app): State<SharedState>) -> Json<Vec<MapInfo>> {
    Json(
        app.maps
            .values()
            .map(|l| MapInfo {
                name: l.name().to_string(),
                width: l.width(),
                height: l.height(),
                glyphs: render_glyphs(&GameState::new(l.clone())),
            })
            .collect(),
    )
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CreateRequest {
    pub map: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub id: String,
    pub created_at: String,
    pub state: StateView,
}

async fn create_session(
    State(app): State<SharedState>,
    payload: Result<Json<CreateRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    let req = body(payload)?;
    let level = app.maps.get(&req.map).ok_or_else(|| ApiError::new(ErrorCode::UnknownMap, format!("no map {:?}", req.map)))?;
    let id = uuid::Uuid::new_v4().to_string();
    let recorder = TraceRecorder::new(GameState::new(level.clone()), TraceSource::Human(id.clone()));
    let created_at = chrono::Utc::now().to_rfc3339();
    let state = state_view(&id, SessionStatus::Active, recorder.state());
    let session = Session { recorder, created_at: created_at.clone(), status: SessionStatus::Active, persisted: None, questionnaire: None };
    app.sessions.lock().expect("session table").insert(id.clone(), session);
    Ok((StatusCode::CREATED, Json(SessionCreated { id, created_at, state })))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionDetail {
    pub created_at: String,
    pub state: StateView,
    pub persisted: Option<TraceRef>,
}

async fn get_session(State(app): State<SharedState>, UrlPath(id): UrlPath<String>) -> Result<Json<SessionDetail>, ApiError> {
    app.with_session(&id, |s| {
        Ok(Json(SessionDetail {
            created_at: s.created_at.clone(),
            state: state_view(&id, s.status, s.recorder.state()),
            persisted: s.persisted.clone(),
        }))
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ActionRequest {
    pub action: Action,
}

async fn submit_action(
    State(app): State<SharedState>,
    UrlPath(id): UrlPath<String>,
    payload: Result<Json<ActionRequest>, JsonRejection>,
) -> Result<Json<ActionResponse>, ApiError> {
    let req = body(payload)?;
    app.with_session(&id, |s| {
        if s.status == SessionStatus::Finished || s.recorder.state().outcome() != Outcome::Ongoing {
            return Err(ApiError::new(ErrorCode::SessionFinished, format!("session {id} takes no more actions")));
        }
        let events = match s.recorder.push(req.action) {
            Ok(rec) => rec.events.clone(),
            Err(e @ EngineError::IllegalAction { .. }) => return Err(ApiError::new(ErrorCode::IllegalAction, e.to_string())),
            Err(e @ EngineError::TerminalState(_)) => return Err(ApiError::new(ErrorCode::SessionFinished, e.to_string())),
        };
        Ok(Json(ActionResponse {
            state: state_view(&id, s.status, s.recorder.state()),
            events,
            prediction: app.predict(&s.recorder),
        }))
    })
}

async fn get_prediction(State(app): State<SharedState>, UrlPath(id): UrlPath<String>) -> Result<Json<PredictionSnapshot>, ApiError> {
    app.with_session(&id, |s| {
        app.predict(&s.recorder).map(Json).ok_or_else(|| ApiError::new(ErrorCode::NoModel, "no prediction model is loaded"))
    })
}

async fn finish_session(State(app): State<SharedState>, UrlPath(id): UrlPath<String>) -> Result<Json<TraceRef>, ApiError> {
    app.with_session(&id, |s| {
        if s.status == SessionStatus::Finished {
            return Err(ApiError::new(ErrorCode::SessionFinished, format!("session {id} is already finished")));
        }
        let trace = s.recorder.clone().finish();
        let day = chrono::Utc::now().format("%Y-%m-%d").to_string();
        let r = app.store.persist(&id, &trace, &day)?;
        s.status = SessionStatus::Finished;
        s.persisted = Some(r.clone());
        Ok(Json(r))
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuestionnaireRequest {
    /// Ten answers, 0 (Never) to 4 (Always); the first is play frequency.
    pub answers: Vec<i64>,
}

async fn submit_questionnaire(
    State(app): State<SharedState>,
    UrlPath(id): UrlPath<String>,
    payload: Result<Json<QuestionnaireRequest>, JsonRejection>,
) -> Result<Json<QuestionnaireRecord>, ApiError> {
    let req = body(payload)?;
    app.with_session(&id, |s| {
        if s.questionnaire.is_some() {
            return Err(ApiError::new(ErrorCode::SessionFinished, format!("session {id} already has a questionnaire")));
        }
        let invalid = |e: persona_core::labeling::QuestionnaireError| ApiError::new(ErrorCode::InvalidQuestionnaire, e.to_string());
        let response = QuestionnaireResponse::new(id.clone(), &req.answers).map_err(invalid)?;
        let scores = questionnaire_scores(&response).map_err(invalid)?;
        app.store.record_questionnaire(&response)?;
        let record = QuestionnaireRecord { response, scores };
        s.questionnaire = Some(record.clone());
        Ok(Json(record))
    })
}

async fn get_questionnaire(State(app): State<SharedState>, UrlPath(id): UrlPath<String>) -> Result<Json<QuestionnaireRecord>, ApiError> {
    app.with_session(&id, |s| {
        s.questionnaire
            .clone()
            .map(Json)
            .ok_or_else(|| ApiError::new(ErrorCode::UnknownSession, format!("session {id} has no questionnaire")))
    })
}
