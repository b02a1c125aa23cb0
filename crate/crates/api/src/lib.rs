//! HTTP JSON service exposing sessions, pipeline feedback and scenarios.

pub mod dto;
pub mod error;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, Request, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use rehearsal_core::strategy::parse_strategy;
use rehearsal_core::{Pipeline, ScenarioStore, SessionState};
use serde::de::DeserializeOwned;
use tokio::net::TcpListener;
use tracing::info;
use uuid::Uuid;

pub use dto::*;
pub use error::{ApiError, ErrorCode};

type SessionHandle = Arc<Mutex<SessionState>>;

/// Shared service state: one pipeline, one premise store, and the live
/// sessions. Each session has its own lock so commands for one session are
/// serialized while other sessions proceed.
pub struct AppState {
    pipeline: Pipeline,
    store: Arc<ScenarioStore>,
    sessions: RwLock<HashMap<Uuid, SessionHandle>>,
}

impl AppState {
    pub fn new(pipeline: Pipeline, store: ScenarioStore) -> Arc<Self> {
        Arc::new(AppState {
            pipeline,
            store: Arc::new(store),
            sessions: RwLock::new(HashMap::new()),
        })
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().unwrap().len()
    }

    fn session(&self, id: &str) -> Result<SessionHandle, ApiError> {
        let uuid =
            Uuid::parse_str(id).map_err(|_| ApiError::not_found(format!("no session {id}")))?;
        self.sessions
            .read()
            .unwrap()
            .get(&uuid)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no session {id}")))
    }
}

/// JSON body extractor whose rejections use the API error shape and which
/// enforces the body version.
pub struct ApiJson<T>(pub T);

impl<S, T> FromRequest<S> for ApiJson<T>
where
    S: Send + Sync,
    T: DeserializeOwned + Versioned,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let Json(body) = Json::<T>::from_request(req, state)
            .await
            .map_err(|e: JsonRejection| ApiError::bad_request(e.body_text()))?;
        body.check_version()?;
        Ok(ApiJson(body))
    }
}

/// Runs a blocking session command on the blocking pool, holding only that
/// session's lock.
async fn with_session<R, F>(state: &AppState, id: &str, f: F) -> Result<R, ApiError>
where
    R: Send + 'static,
    F: FnOnce(&Pipeline, &mut SessionState) -> Result<R, ApiError> + Send + 'static,
{
    let handle = state.session(id)?;
    let pipeline = state.pipeline.clone();
    tokio::task::spawn_blocking(move || {
        let mut session = handle.lock().unwrap_or_else(|e| e.into_inner());
        f(&pipeline, &mut session)
    })
    .await
    .map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string()))?
}

async fn healthz(State(state): State<Arc<AppState>>) -> Json<Health> {
    Json(Health {
        v: API_VERSION,
        status: "ok".into(),
        provider: state.pipeline.gateway().provider_name().to_string(),
    })
}

async fn list_scenarios(State(state): State<Arc<AppState>>) -> Json<ScenarioList> {
    Json(ScenarioList {
        v: API_VERSION,
        scenarios: state.store.list(),
    })
}

async fn create_scenario(
    State(state): State<Arc<AppState>>,
    ApiJson(req): ApiJson<CreateScenarioRequest>,
) -> Result<(StatusCode, Json<ScenarioResponse>), ApiError> {
    let store = state.store.clone();
    let scenario = tokio::task::spawn_blocking(move || {
        store.create_custom(&req.title, &req.body, &req.party_user, &req.party_sim)
    })
    .await
    .map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string()))??;
    Ok((
        StatusCode::CREATED,
        Json(ScenarioResponse {
            v: API_VERSION,
            scenario,
        }),
    ))
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    ApiJson(req): ApiJson<CreateSessionRequest>,
) -> Result<(StatusCode, Json<SessionSnapshot>), ApiError> {
    let premise = state.store.get(&req.premise_id)?;
    let pipeline = state.pipeline.clone();
    let session = tokio::task::spawn_blocking(move || SessionState::start(&pipeline, premise))
        .await
        .map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string()))??;
    let snapshot = SessionSnapshot::of(&session);
    info!(session_id = %session.session_id, "session created");
    state
        .sessions
        .write()
        .unwrap()
        .insert(session.session_id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(snapshot)))
}

async fn get_session(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<SessionSnapshot>, ApiError> {
    with_session(&state, &id, |_, s| Ok(SessionSnapshot::of(s)))
        .await
        .map(Json)
}

async fn submit_message(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<MessageRequest>,
) -> Result<Json<BundleResponse>, ApiError> {
    with_session(&state, &id, move |p, s| {
        Ok(BundleResponse::masked(s.submit_user_message(p, &req.text)?))
    })
    .await
    .map(Json)
}

async fn select(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<SelectRequest>,
) -> Result<Json<SessionSnapshot>, ApiError> {
    with_session(&state, &id, move |_, s| {
        Ok(SessionSnapshot::of(s.select_option(req.option)?))
    })
    .await
    .map(Json)
}

async fn recall(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<RecallRequest>,
) -> Result<Json<RecallResponse>, ApiError> {
    with_session(&state, &id, move |_, s| {
        let outcome = s.attempt_recall(&req.answer)?;
        Ok(RecallResponse {
            v: API_VERSION,
            outcome,
            phase: s.phase,
        })
    })
    .await
    .map(Json)
}

async fn recognize(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<RecognizeRequest>,
) -> Result<Json<RecallResponse>, ApiError> {
    let choice = parse_strategy(&req.strategy).map_err(|e| ApiError::bad_request(e.to_string()))?;
    with_session(&state, &id, move |_, s| {
        let outcome = s.choose_recognition(choice)?;
        Ok(RecallResponse {
            v: API_VERSION,
            outcome,
            phase: s.phase,
        })
    })
    .await
    .map(Json)
}

async fn fast_forward(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<FastForwardRequest>,
) -> Result<Json<MessageResponse>, ApiError> {
    with_session(&state, &id, move |p, s| {
        let mut message = s.fast_forward(p, req.option, req.variation_index)?;
        message.strategy = None;
        Ok(MessageResponse {
            v: API_VERSION,
            message,
        })
    })
    .await
    .map(Json)
}

async fn restart(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<SessionSnapshot>, ApiError> {
    with_session(&state, &id, |p, s| Ok(SessionSnapshot::of(s.restart(p)?)))
        .await
        .map(Json)
}

/// GETs are side-effect free. Restart is idempotent with a deterministic
/// provider. Message, select, recall and recognize are not idempotent; a
/// replay fails the phase check with 409.
pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/scenarios", get(list_scenarios).post(create_scenario))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/message", post(submit_message))
        .route("/sessions/{id}/select", post(select))
        .route("/sessions/{id}/recall", post(recall))
        .route("/sessions/{id}/recognize", post(recognize))
        .route("/sessions/{id}/fast-forward", post(fast_forward))
        .route("/sessions/{id}/restart", post(restart))
        .with_state(state)
}

pub async fn serve(listener: TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    let addr: SocketAddr = listener.local_addr()?;
    info!(%addr, "listening");
    axum::serve(listener, router(state)).await
}
