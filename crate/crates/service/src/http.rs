//! HTTP surface: chat API, session transcripts, analytics, health and the
//! messaging webhook.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::json;

use polyrag_core::conversation::Channel;
use polyrag_core::lang::LangTag;
use polyrag_core::speech::{AudioBlob, WAV_MIME};

use crate::message::{AudioInput, InboundMessage, MessageBody, OutboundMessage};
use crate::pipeline::{ChatError, ChatService};
use crate::webhook::{webhook_parse, WebhookReply};

/// Header carrying the shared webhook token on deliveries.
pub const TOKEN_HEADER: &str = "x-webhook-token";

#[derive(Clone)]
pub struct AppState {
    pub service: Arc<ChatService>,
    pub verify_token: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    #[serde(default)]
    pub session_id: Option<String>,
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub audio_b64: Option<String>,
    #[serde(default)]
    pub mime: Option<String>,
    #[serde(default)]
    pub lang_hint: Option<String>,
    /// Optional idempotency key; retries with the same key get the same reply.
    #[serde(default)]
    pub message_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub session_id: String,
    pub text: String,
    pub lang: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_b64: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mime: Option<String>,
    pub sources: Vec<String>,
    pub refused: bool,
    pub degraded: bool,
}

impl From<OutboundMessage> for ChatResponse {
    fn from(m: OutboundMessage) -> Self {
        let (audio_b64, mime) = match m.audio {
            Some(a) => (Some(a.b64), Some(a.mime_type)),
            None => (None, None),
        };
        Self { session_id: m.session_id, text: m.text, lang: m.lang.code, audio_b64, mime, sources: m.sources, refused: m.refused, degraded: m.degraded }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplaintRequest {
    #[serde(default)]
    pub session_id: Option<String>,
    pub text: String,
}

fn error(status: StatusCode, message: impl ToString, field: Option<&str>) -> Response {
    let mut body = json!({ "error": message.to_string() });
    if let Some(f) = field {
        body["field"] = json!(f);
    }
    (status, Json(body)).into_response()
}

fn chat_error(e: ChatError) -> Response {
    match &e {
        ChatError::Invalid { field, message } => error(StatusCode::BAD_REQUEST, message, Some(field)),
        ChatError::Storage(_) | ChatError::Internal(_) => {
            tracing::error!("chat failed: {e}");
            error(StatusCode::INTERNAL_SERVER_ERROR, e, None)
        }
    }
}

/// Validates a web chat body into a channel-neutral message.
pub fn chat_request_to_message(req: ChatRequest, service: &ChatService) -> Result<InboundMessage, Response> {
    let bad = |field: &str, msg: &str| error(StatusCode::BAD_REQUEST, msg, Some(field));
    let body = match (req.text, req.audio_b64) {
        (Some(_), Some(_)) => return Err(bad("audio_b64", "send either text or audio_b64, not both")),
        (None, None) => return Err(bad("text", "one of text or audio_b64 is required")),
        (Some(t), None) if t.trim().is_empty() => return Err(bad("text", "must not be empty")),
        (Some(t), None) => MessageBody::Text(t),
        (None, Some(b)) => {
            let bytes = B64.decode(b.trim()).map_err(|e| bad("audio_b64", &format!("not base64: {e}")))?;
            let mime = req.mime.unwrap_or_else(|| WAV_MIME.to_string());
            MessageBody::Audio(AudioInput::Inline(AudioBlob { mime, ..AudioBlob::wav(bytes) }))
        }
    };
    let lang_hint = match req.lang_hint.as_deref().map(str::trim) {
        None | Some("") => None,
        Some(code) => Some(LangTag::new(code)),
    };
    // web clients are identified by the session they hold
    let sender_id = req
        .session_id
        .as_deref()
        .and_then(|id| service.store().get(id))
        .filter(|s| s.session.channel == Channel::Web)
        .map(|s| s.sender_id)
        .unwrap_or_else(|| format!("web-{}", uuid::Uuid::new_v4()));
    Ok(InboundMessage {
        channel: Channel::Web,
        sender_id,
        message_id: req.message_id.unwrap_or_else(|| uuid::Uuid::new_v4().to_string()),
        session_id: req.session_id,
        body,
        lang_hint,
        timestamp: service.now(),
    })
}

async fn run_chat(service: Arc<ChatService>, msg: InboundMessage) -> Result<OutboundMessage, Response> {
    tokio::task::spawn_blocking(move || service.handle_chat(msg))
        .await
        .map_err(|e| error(StatusCode::INTERNAL_SERVER_ERROR, e, None))?
        .map_err(chat_error)
}

async fn chat(State(state): State<AppState>, body: Bytes) -> Response {
    let req: ChatRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("invalid JSON body: {e}"), None),
    };
    let msg = match chat_request_to_message(req, &state.service) {
        Ok(m) => m,
        Err(r) => return r,
    };
    match run_chat(state.service, msg).await {
        Ok(out) => Json(ChatResponse::from(out)).into_response(),
        Err(r) => r,
    }
}

async fn session(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    match state.service.transcript(&id) {
        Some(t) => Json(t).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("no session `{id}`"), None),
    }
}

async fn analytics(State(state): State<AppState>) -> Response {
    Json(state.service.analytics()).into_response()
}

async fn health(State(state): State<AppState>) -> Response {
    Json(json!({ "status": "ok", "index_size": state.service.index_size() })).into_response()
}

async fn complaint(State(state): State<AppState>, body: Bytes) -> Response {
    let req: ComplaintRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("invalid JSON body: {e}"), None),
    };
    let service = state.service.clone();
    match tokio::task::spawn_blocking(move || service.record_complaint(req.session_id, &req.text)).await {
        Ok(Ok(())) => (StatusCode::ACCEPTED, Json(json!({ "status": "recorded" }))).into_response(),
        Ok(Err(e)) => chat_error(e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e, None),
    }
}

/// Subscription handshake: echo `hub.challenge` when `hub.verify_token` matches.
async fn webhook_verify(State(state): State<AppState>, Query(q): Query<HashMap<String, String>>) -> Response {
    let token_ok = match &state.verify_token {
        Some(expected) => q.get("hub.verify_token") == Some(expected),
        None => true,
    };
    match (token_ok, q.get("hub.challenge")) {
        (false, _) => error(StatusCode::FORBIDDEN, "verify token mismatch", None),
        (true, Some(c)) => c.clone().into_response(),
        (true, None) => error(StatusCode::BAD_REQUEST, "missing hub.challenge", Some("hub.challenge")),
    }
}

async fn webhook_message(State(state): State<AppState>, headers: HeaderMap, body: Bytes) -> Response {
    if let Some(expected) = &state.verify_token {
        if headers.get(TOKEN_HEADER).and_then(|v| v.to_str().ok()) != Some(expected.as_str()) {
            return error(StatusCode::UNAUTHORIZED, "missing or wrong webhook token", None);
        }
    }
    let msg = match webhook_parse(&body) {
        Ok(m) => m,
        Err(e) => return error(StatusCode::BAD_REQUEST, &e, e.field()),
    };
    match run_chat(state.service, msg).await {
        Ok(out) => Json(WebhookReply::from(&out)).into_response(),
        Err(r) => r,
    }
}

pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/v1/chat", post(chat))
        .route("/v1/sessions/{id}", get(session))
        .route("/v1/analytics", get(analytics))
        .route("/v1/health", get(health))
        .route("/v1/complaints", post(complaint))
        .route("/webhook/messages", get(webhook_verify).post(webhook_message))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

/// Binds and serves until Ctrl-C.
pub async fn serve(state: AppState, static_dir: Option<PathBuf>, listen: &str) -> std::io::Result<()> {
    let addr: SocketAddr = listen.parse().map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, format!("listen `{listen}`: {e}")))?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
