//! Channel-neutral inbound and outbound messages.

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use polyrag_core::conversation::Channel;
use polyrag_core::lang::LangTag;
use polyrag_core::speech::AudioBlob;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageKind {
    Text,
    Audio,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AudioInput {
    /// Bytes carried in the request itself.
    Inline(AudioBlob),
    /// A reference resolved through the media store.
    Media { id: String, mime_type: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MessageBody {
    Text(String),
    Audio(AudioInput),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InboundMessage {
    pub channel: Channel,
    pub sender_id: String,
    /// Idempotency key, unique per sender.
    pub message_id: String,
    /// Session the client wants to continue, when it knows one.
    pub session_id: Option<String>,
    pub body: MessageBody,
    pub lang_hint: Option<LangTag>,
    pub timestamp: DateTime<Utc>,
}

impl InboundMessage {
    pub fn kind(&self) -> MessageKind {
        match self.body {
            MessageBody::Text(_) => MessageKind::Text,
            MessageBody::Audio(_) => MessageKind::Audio,
        }
    }
}

/// Base64 audio as it travels in responses and the journal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedAudio {
    pub b64: String,
    pub mime_type: String,
}

impl EncodedAudio {
    pub fn encode(blob: &AudioBlob) -> Self {
        Self { b64: B64.encode(&blob.bytes), mime_type: blob.mime.clone() }
    }

    pub fn decode(&self) -> Result<AudioBlob, base64::DecodeError> {
        let bytes = B64.decode(&self.b64)?;
        Ok(AudioBlob { mime: self.mime_type.clone(), ..AudioBlob::wav(bytes) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutboundMessage {
    pub recipient_id: String,
    pub session_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio: Option<EncodedAudio>,
    /// Language of `text`.
    pub lang: LangTag,
    pub sources: Vec<String>,
    pub refused: bool,
    #[serde(default)]
    pub degraded: bool,
}
