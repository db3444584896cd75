//! Messaging webhook wire format.
//!
//! Inbound:
//! `{"message_id","from","timestamp":RFC3339,"type":"text"|"audio","text"?:{"body"},"audio"?:{"id","mime_type"}}`
//!
//! Outbound:
//! `{"to","type":"text"|"audio","text":{"body"},"audio"?:{"b64","mime_type"}}`

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use polyrag_core::conversation::Channel;

use crate::message::{AudioInput, EncodedAudio, InboundMessage, MessageBody, OutboundMessage};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WebhookError {
    #[error("body is not a JSON object: {0}")]
    NotJson(String),
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("unsupported message type `{0}`")]
    UnsupportedType(String),
}

impl WebhookError {
    /// The offending field, when there is one.
    pub fn field(&self) -> Option<&str> {
        match self {
            WebhookError::NotJson(_) => None,
            WebhookError::Field { field, .. } => Some(field),
            WebhookError::UnsupportedType(_) => Some("type"),
        }
    }

    fn field_err(field: &str, message: &str) -> Self {
        WebhookError::Field { field: field.into(), message: message.into() }
    }
}

fn required_str<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a str, WebhookError> {
    match obj.get(key) {
        None | Some(Value::Null) => Err(WebhookError::field_err(path, "is required")),
        Some(Value::String(s)) if s.trim().is_empty() => Err(WebhookError::field_err(path, "must not be empty")),
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(WebhookError::field_err(path, "must be a string")),
    }
}

fn required_obj<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Map<String, Value>, WebhookError> {
    match obj.get(key) {
        None | Some(Value::Null) => Err(WebhookError::field_err(key, "is required for this message type")),
        Some(Value::Object(o)) => Ok(o),
        Some(_) => Err(WebhookError::field_err(key, "must be an object")),
    }
}

/// Validates fields in order: message_id, from, timestamp, type, then the
/// payload for that type. The first failure is reported.
pub fn webhook_parse(body: &[u8]) -> Result<InboundMessage, WebhookError> {
    let value: Value = serde_json::from_slice(body).map_err(|e| WebhookError::NotJson(e.to_string()))?;
    let Value::Object(obj) = value else {
        return Err(WebhookError::NotJson("top-level value must be an object".into()));
    };
    let message_id = required_str(&obj, "message_id", "message_id")?;
    let from = required_str(&obj, "from", "from")?;
    let ts = required_str(&obj, "timestamp", "timestamp")?;
    let timestamp: DateTime<Utc> = DateTime::parse_from_rfc3339(ts)
        .map_err(|e| WebhookError::field_err("timestamp", &format!("not RFC 3339: {e}")))?
        .with_timezone(&Utc);
    let kind = required_str(&obj, "type", "type")?;
    let body = match kind {
        "text" => {
            let text = required_obj(&obj, "text")?;
            MessageBody::Text(required_str(text, "body", "text.body")?.to_string())
        }
        "audio" => {
            let audio = required_obj(&obj, "audio")?;
            let id = required_str(audio, "id", "audio.id")?.to_string();
            let mime_type = required_str(audio, "mime_type", "audio.mime_type")?.to_string();
            MessageBody::Audio(AudioInput::Media { id, mime_type })
        }
        other => return Err(WebhookError::UnsupportedType(other.to_string())),
    };
    Ok(InboundMessage {
        channel: Channel::Webhook,
        sender_id: from.to_string(),
        message_id: message_id.to_string(),
        session_id: None,
        body,
        lang_hint: None,
        timestamp,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextBody {
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WebhookReply {
    pub to: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub text: TextBody,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio: Option<EncodedAudio>,
}

impl From<&OutboundMessage> for WebhookReply {
    fn from(m: &OutboundMessage) -> Self {
        Self {
            to: m.recipient_id.clone(),
            kind: if m.audio.is_some() { "audio" } else { "text" }.into(),
            text: TextBody { body: m.text.clone() },
            audio: m.audio.clone(),
        }
    }
}
