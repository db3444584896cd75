mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use common::*;
use http_body_util::BodyExt;
use polyrag_core::lang::{LangTag, TransliterationTranslator};
use polyrag_core::speech::{decode_mock_payload, mock_audio, AudioBlob};
use polyrag_service::http::TOKEN_HEADER;
use polyrag_service::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

const Q: &str = "How many days of annual leave do permanent employees of the Granite unit receive?";

struct App {
    router: axum::Router,
    _dir: tempfile::TempDir,
}

fn app(token: Option<&str>, static_dir: Option<std::path::PathBuf>) -> App {
    let dir = tempfile::tempdir().unwrap();
    let s = stack(&dir.path().join("j"), Arc::new(TransliterationTranslator));
    s.media.insert("voice-1", mock_audio(Q, &LangTag::en()).bytes);
    let state = AppState { service: Arc::new(s.service), verify_token: token.map(String::from) };
    App { router: router(state, static_dir), _dir: dir }
}

async fn call(app: &App, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let res = app.router.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (status, res.into_body().collect().await.unwrap().to_bytes().to_vec())
}

fn post(uri: &str, body: Value) -> Request<Body> {
    Request::post(uri).header("content-type", "application/json").body(Body::from(body.to_string())).unwrap()
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

#[tokio::test]
async fn health_reports_index_size() {
    let a = app(None, None);
    let (status, body) = call(&a, get("/v1/health")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(json(&body), json!({"status": "ok", "index_size": shipped_index().len()}));
}

#[tokio::test]
async fn chat_then_transcript() {
    let a = app(None, None);
    let (status, body) = call(&a, post("/v1/chat", json!({"text": Q}))).await;
    assert_eq!(status, StatusCode::OK);
    let r = json(&body);
    let sid = r["session_id"].as_str().unwrap().to_string();
    assert_eq!(r["lang"], "en");
    assert_eq!(r["refused"], false);
    assert!(r.get("audio_b64").is_none());
    assert!(r["text"].as_str().unwrap().contains("15 days"));

    // follow-up in the same session, in Urdu
    let ur = polyrag_core::lang::Translator::translate(&TransliterationTranslator, "And sick leave?", &LangTag::en(), &LangTag::ur()).unwrap();
    let (_, body) = call(&a, post("/v1/chat", json!({"session_id": sid, "text": ur}))).await;
    let r2 = json(&body);
    assert_eq!(r2["session_id"], sid.as_str());
    assert_eq!(r2["lang"], "ur");

    let (status, body) = call(&a, get(&format!("/v1/sessions/{sid}"))).await;
    assert_eq!(status, StatusCode::OK);
    let t = json(&body);
    assert_eq!(t["channel"], "Web");
    let turns = t["turns"].as_array().unwrap();
    assert_eq!(turns.len(), 2);
    assert_eq!(turns[1]["question"], ur.as_str());
    assert_eq!(turns[1]["lang"]["code"], "ur");
    let src = &turns[0]["sources"][0];
    assert!(src["chunk_id"].as_str().unwrap().contains('#'));
    assert!(!src["text"].as_str().unwrap().is_empty());

    let (status, _) = call(&a, get("/v1/sessions/does-not-exist")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn chat_audio_round_trip() {
    let a = app(None, None);
    let ur_q = polyrag_core::lang::Translator::translate(&TransliterationTranslator, Q, &LangTag::en(), &LangTag::ur()).unwrap();
    let wav = mock_audio(&ur_q, &LangTag::ur());
    let (status, body) = call(&a, post("/v1/chat", json!({"audio_b64": B64.encode(&wav.bytes), "mime": "audio/wav"}))).await;
    assert_eq!(status, StatusCode::OK);
    let r = json(&body);
    assert_eq!(r["lang"], "ur");
    assert_eq!(r["mime"], "audio/wav");
    let bytes = B64.decode(r["audio_b64"].as_str().unwrap()).unwrap();
    assert_eq!(decode_mock_payload(&AudioBlob::wav(bytes)).unwrap(), ("ur".to_string(), r["text"].as_str().unwrap().to_string()));
}

#[tokio::test]
async fn chat_rejects_bad_bodies_with_field() {
    let a = app(None, None);
    for (body, field) in [
        (json!({}), "text"),
        (json!({"text": "hi", "audio_b64": "AAAA"}), "audio_b64"),
        (json!({"audio_b64": "***"}), "audio_b64"),
        (json!({"audio_b64": B64.encode(b"RIFF")}), "audio"),
        (json!({"text": "  "}), "text"),
    ] {
        let (status, bytes) = call(&a, post("/v1/chat", body.clone())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
        assert_eq!(json(&bytes)["field"], field, "{body}");
    }
    let (status, _) = call(&a, Request::post("/v1/chat").body(Body::from("{nope")).unwrap()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn chat_message_id_is_idempotent() {
    let a = app(None, None);
    let (_, first) = call(&a, post("/v1/chat", json!({"text": Q, "message_id": "k1"}))).await;
    let sid = json(&first)["session_id"].clone();
    let (_, again) = call(&a, post("/v1/chat", json!({"text": Q, "message_id": "k1", "session_id": sid}))).await;
    assert_eq!(first, again);
}

#[tokio::test]
async fn webhook_text_audio_and_errors() {
    let a = app(None, None);
    let text = json!({"message_id":"m1","from":"u1","timestamp":"2024-01-01T00:00:00Z","type":"text","text":{"body": Q}});
    let (status, body) = call(&a, post("/webhook/messages", text.clone())).await;
    assert_eq!(status, StatusCode::OK);
    let r = json(&body);
    assert_eq!((r["to"].as_str(), r["type"].as_str()), (Some("u1"), Some("text")));
    assert!(r["text"]["body"].as_str().unwrap().contains("15 days"));
    let (_, again) = call(&a, post("/webhook/messages", text)).await;
    assert_eq!(body, again);

    let audio = json!({"message_id":"m2","from":"u1","timestamp":"2024-01-01T00:01:00Z","type":"audio","audio":{"id":"voice-1","mime_type":"audio/wav"}});
    let (status, body) = call(&a, post("/webhook/messages", audio)).await;
    assert_eq!(status, StatusCode::OK);
    let r = json(&body);
    assert_eq!(r["type"], "audio");
    assert_eq!(r["audio"]["mime_type"], "audio/wav");

    let missing_from = json!({"message_id":"m3","timestamp":"2024-01-01T00:00:00Z","type":"text","text":{"body":"hi"}});
    let (status, body) = call(&a, post("/webhook/messages", missing_from)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(json(&body)["field"], "from");
    let video = json!({"message_id":"m4","from":"u1","timestamp":"2024-01-01T00:00:00Z","type":"video"});
    let (status, body) = call(&a, post("/webhook/messages", video)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(json(&body)["error"].as_str().unwrap().contains("unsupported"));

    let (_, body) = call(&a, get("/v1/analytics")).await;
    let snap = json(&body);
    assert_eq!(snap["conversations"], 2);
    assert_eq!(snap["conversations_per_channel"]["Webhook"], 2);
    assert_eq!(snap["voice_display"], "50%");
}

#[tokio::test]
async fn webhook_token_and_handshake() {
    let a = app(Some("s3cret"), None);
    let (status, body) = call(&a, get("/webhook/messages?hub.mode=subscribe&hub.verify_token=s3cret&hub.challenge=42")).await;
    assert_eq!((status, body.as_slice()), (StatusCode::OK, b"42".as_slice()));
    let (status, _) = call(&a, get("/webhook/messages?hub.verify_token=wrong&hub.challenge=42")).await;
    assert_eq!(status, StatusCode::FORBIDDEN);

    let msg = json!({"message_id":"m1","from":"u1","timestamp":"2024-01-01T00:00:00Z","type":"text","text":{"body": Q}});
    let (status, _) = call(&a, post("/webhook/messages", msg.clone())).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
    let req = Request::post("/webhook/messages").header(TOKEN_HEADER, "s3cret").body(Body::from(msg.to_string())).unwrap();
    let (status, _) = call(&a, req).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn complaints_are_counted() {
    let a = app(None, None);
    let (status, _) = call(&a, post("/v1/complaints", json!({"text": "answer was wrong"}))).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let (status, _) = call(&a, post("/v1/complaints", json!({"text": ""}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (_, body) = call(&a, get("/v1/analytics")).await;
    assert_eq!(json(&body)["complaint_count"], 1);
}

#[tokio::test]
async fn static_assets_are_served() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<h1>chat</h1>").unwrap();
    let a = app(None, Some(dir.path().to_path_buf()));
    let (status, body) = call(&a, get("/index.html")).await;
    assert_eq!((status, body.as_slice()), (StatusCode::OK, b"<h1>chat</h1>".as_slice()));
    let (status, _) = call(&a, get("/v1/health")).await;
    assert_eq!(status, StatusCode::OK);
}
