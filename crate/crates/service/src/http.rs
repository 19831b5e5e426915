//! HTTP+JSON front end.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | POST | `/sessions` | optional `{context}` | `{session_id}` |
//! | POST | `/sessions/{id}/utterance` | `{text}` | EngineReply |
//! | POST | `/sessions/{id}/answer` | `{answer}` | EngineReply |
//! | GET | `/sessions/{id}/wm` | | WM dump |
//! | DELETE | `/sessions/{id}` | | `{deleted}` |
//! | GET | `/registry` | | snapshot summary |
//! | GET | `/healthz` | | `{status}` |

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use nlcompose_core::composition::DeviceContext;
use nlcompose_core::registry::Diagnostic;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::engine::{Engine, EngineError};

#[derive(Debug, Default, Deserialize)]
pub struct NewSession {
    #[serde(default)]
    pub context: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct Utterance {
    pub text: String,
}

#[derive(Debug, Deserialize)]
pub struct Answer {
    pub answer: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct MethodSummary {
    pub method_id: String,
    pub capabilities: Vec<String>,
    pub args: Vec<String>,
    pub returns_key: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ServiceSummary {
    pub service_id: String,
    pub methods: Vec<MethodSummary>,
    pub concretes: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct RegistrySummary {
    pub version: u64,
    pub model: String,
    pub sentences: usize,
    pub services: Vec<ServiceSummary>,
    pub diagnostics: Vec<Diagnostic>,
}

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        ApiError(StatusCode::NOT_FOUND, e.to_string())
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

// Engine calls can block on executors, so they leave the async workers.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, EngineError> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map(Json)
        .map_err(ApiError::from)
}

async fn create_session(
    State(engine): State<Arc<Engine>>,
    body: Option<Json<NewSession>>,
) -> Result<(StatusCode, Json<serde_json::Value>), ApiError> {
    let context = match body.and_then(|Json(b)| b.context) {
        Some(text) => Some(
            text.parse::<DeviceContext>()
                .map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.to_string()))?,
        ),
        None => None,
    };
    let id = engine.create_session();
    if let Some(ctx) = context {
        engine.with_session(&id, |s| s.context = ctx)?;
    }
    Ok((StatusCode::CREATED, Json(json!({ "session_id": id }))))
}

async fn utterance(
    State(engine): State<Arc<Engine>>,
    Path(id): Path<String>,
    Json(body): Json<Utterance>,
) -> ApiResult<crate::engine::EngineReply> {
    blocking(move || engine.handle_utterance(&id, &body.text)).await
}

async fn answer(
    State(engine): State<Arc<Engine>>,
    Path(id): Path<String>,
    Json(body): Json<Answer>,
) -> ApiResult<crate::engine::EngineReply> {
    blocking(move || engine.answer_pending(&id, &body.answer)).await
}

async fn wm(State(engine): State<Arc<Engine>>, Path(id): Path<String>) -> ApiResult<crate::engine::WmDump> {
    blocking(move || engine.wm_dump(&id)).await
}

async fn delete_session(State(engine): State<Arc<Engine>>, Path(id): Path<String>) -> ApiResult<serde_json::Value> {
    engine.close_session(&id)?;
    Ok(Json(json!({ "deleted": id })))
}

pub fn registry_summary(engine: &Engine) -> RegistrySummary {
    let ctx = engine.registry();
    let snapshot = &ctx.snapshot;
    let services = snapshot
        .abstracts
        .values()
        .map(|s| ServiceSummary {
            service_id: s.service_id.clone(),
            methods: s
                .methods
                .iter()
                .map(|m| MethodSummary {
                    method_id: m.method_id.clone(),
                    capabilities: m.capabilities.clone(),
                    args: m.args.iter().map(|a| a.name.clone()).collect(),
                    returns_key: m.returns_key.clone(),
                })
                .collect(),
            concretes: snapshot
                .concretes
                .values()
                .filter(|c| c.implements == s.service_id)
                .map(|c| c.concrete_id.clone())
                .collect(),
        })
        .collect();
    RegistrySummary {
        version: snapshot.version,
        model: ctx.index.model_name.clone(),
        sentences: ctx.index.len(),
        services,
        diagnostics: ctx.diagnostics.clone(),
    }
}

async fn registry(State(engine): State<Arc<Engine>>) -> Json<RegistrySummary> {
    Json(registry_summary(&engine))
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", delete(delete_session))
        .route("/sessions/{id}/utterance", post(utterance))
        .route("/sessions/{id}/answer", post(answer))
        .route("/sessions/{id}/wm", get(wm))
        .route("/registry", get(registry))
        .route("/healthz", get(healthz))
        .with_state(engine)
}

pub async fn serve(engine: Arc<Engine>, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(engine))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
