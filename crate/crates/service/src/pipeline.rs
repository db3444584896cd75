//! The chat pipeline shared by every channel.

use std::sync::{Arc, PoisonError};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use polyrag_core::conversation::{Channel, ChatTurn, ConversationEngine, EngineError, Modality, TurnMeta, UNAVAILABLE_TEXT};
use polyrag_core::lang::{LangTag, LanguageRouter, RouteError};
use polyrag_core::speech::{AudioBlob, SpeechError, SpeechGateway};

use crate::analytics::AnalyticsSnapshot;
use crate::journal::TurnRecord;
use crate::media::{MediaError, MediaStore};
use crate::message::{AudioInput, EncodedAudio, InboundMessage, MessageBody, OutboundMessage};
use crate::sessions::{SessionStore, StoreError};

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

#[derive(Debug, thiserror::Error)]
pub enum ChatError {
    /// The request itself is unusable (maps to a 400).
    #[error("field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error(transparent)]
    Storage(#[from] StoreError),
    #[error("internal error: {0}")]
    Internal(String),
}

impl ChatError {
    fn invalid(field: &str, message: impl ToString) -> Self {
        ChatError::Invalid { field: field.into(), message: message.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceView {
    pub chunk_id: String,
    pub doc_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptTurn {
    pub message_id: String,
    pub timestamp: DateTime<Utc>,
    pub modality: Modality,
    /// Language the user wrote or spoke in.
    pub lang: LangTag,
    pub question: String,
    pub question_en: String,
    pub retrieval_query: String,
    pub answer: String,
    pub answer_lang: LangTag,
    pub answer_en: String,
    pub refused: bool,
    pub degraded: bool,
    pub audio: bool,
    pub sources: Vec<SourceView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub session_id: String,
    pub channel: Channel,
    pub created: DateTime<Utc>,
    pub last_active: DateTime<Utc>,
    pub expired: bool,
    pub turns: Vec<TranscriptTurn>,
}

/// Where the English question came from.
struct Routed {
    english: String,
    original_text: String,
    lang: LangTag,
    modality: Modality,
}

pub struct ChatService {
    engine: ConversationEngine,
    router: LanguageRouter,
    speech: SpeechGateway,
    media: Arc<dyn MediaStore>,
    store: SessionStore,
    clock: Clock,
}

impl std::fmt::Debug for ChatService {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChatService").field("engine", &self.engine).field("router", &self.router).finish_non_exhaustive()
    }
}

impl ChatService {
    pub fn new(
        engine: ConversationEngine,
        router: LanguageRouter,
        speech: SpeechGateway,
        media: Arc<dyn MediaStore>,
        store: SessionStore,
    ) -> Self {
        Self { engine, router, speech, media, store, clock: Arc::new(Utc::now) }
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    pub fn engine(&self) -> &ConversationEngine {
        &self.engine
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }

    pub fn index_size(&self) -> usize {
        self.engine.index().len()
    }

    pub fn analytics(&self) -> AnalyticsSnapshot {
        self.store.analytics()
    }

    pub fn now(&self) -> DateTime<Utc> {
        (self.clock)()
    }

    /// Answers one inbound message. A redelivered (sender, message_id) gets
    /// the stored response back and logs nothing.
    pub fn handle_chat(&self, msg: InboundMessage) -> Result<OutboundMessage, ChatError> {
        if let Some(r) = self.store.cached_response(&msg.sender_id, &msg.message_id) {
            return Ok(r);
        }
        let now = self.now();
        let handle = self.store.resolve(msg.channel, &msg.sender_id, msg.session_id.as_deref(), now).map_err(StoreError::from)?;
        let _turn_guard = handle.lock.lock().unwrap_or_else(PoisonError::into_inner);
        // a concurrent delivery of the same message may have finished first
        if let Some(r) = self.store.cached_response(&msg.sender_id, &msg.message_id) {
            return Ok(r);
        }
        let sid = handle.session_id;
        let voice = matches!(msg.body, MessageBody::Audio(_));
        let routed = match self.route(&msg) {
            Ok(r) => r,
            Err(Degrade) => return Ok(self.degraded_reply(&msg, &sid, voice, UNAVAILABLE_TEXT)),
        }?;
        let history = self.store.history(&sid);
        let meta = TurnMeta { modality: routed.modality, original_lang: routed.lang.clone(), now };
        let turn = match self.engine.answer(&history, &routed.english, meta) {
            Ok(turn) => turn,
            Err(EngineError::EmptyQuestion) => return Err(ChatError::invalid("text", "question is empty")),
            Err(EngineError::Retrieval(e)) => return Err(ChatError::Internal(e.to_string())),
            Err(EngineError::Llm { turn, .. }) => return Ok(self.degraded_reply(&msg, &sid, voice, &turn.answer_en)),
        };
        let answer = self.router.route_outbound(&turn.answer_en, &routed.lang);
        let audio = if voice { self.speak(&answer.text, &answer.lang, &turn.answer_en) } else { None };
        let response = OutboundMessage {
            recipient_id: msg.sender_id.clone(),
            session_id: sid.clone(),
            text: answer.text,
            degraded: turn.degraded || answer.degraded || (voice && audio.is_none()),
            audio,
            lang: answer.lang,
            sources: turn.sources.clone(),
            refused: turn.refused,
        };
        self.store.append_turn(TurnRecord {
            session_id: sid,
            channel: msg.channel,
            sender_id: msg.sender_id,
            message_id: msg.message_id,
            original_text: routed.original_text,
            turn,
            response: response.clone(),
        })?;
        Ok(response)
    }

    /// Voice reply in the answer's language when the TTS speaks it, else
    /// English audio of the English answer.
    fn speak(&self, text: &str, lang: &LangTag, answer_en: &str) -> Option<EncodedAudio> {
        let blob = if self.speech.speaks(lang) {
            self.speech.synthesize(text, lang)
        } else {
            self.speech.synthesize(answer_en, &LangTag::en())
        };
        blob.ok().map(|b| EncodedAudio::encode(&b))
    }

    fn degraded_reply(&self, msg: &InboundMessage, sid: &str, voice: bool, text: &str) -> OutboundMessage {
        let en = LangTag::en();
        OutboundMessage {
            recipient_id: msg.sender_id.clone(),
            session_id: sid.to_string(),
            text: text.to_string(),
            audio: if voice { self.speak(text, &en, text) } else { None },
            lang: en,
            sources: Vec::new(),
            refused: false,
            degraded: true,
        }
    }

    fn audio_blob(&self, input: &AudioInput) -> Result<AudioBlob, ChatError> {
        match input {
            AudioInput::Inline(blob) => Ok(blob.clone()),
            AudioInput::Media { id, mime_type } => match self.media.fetch(id) {
                Ok(bytes) => Ok(AudioBlob { mime: mime_type.clone(), ..AudioBlob::wav(bytes) }),
                Err(e @ (MediaError::NotFound(_) | MediaError::InvalidId(_))) => Err(ChatError::invalid("audio.id", e)),
                Err(e) => Err(ChatError::Internal(e.to_string())),
            },
        }
    }

    /// `Err(Degrade)` means a provider is down and the caller should send
    /// the degraded reply.
    fn route(&self, msg: &InboundMessage) -> Result<Result<Routed, ChatError>, Degrade> {
        match &msg.body {
            MessageBody::Text(text) => match self.router.route_inbound(text, msg.lang_hint.as_ref()) {
                Ok(q) => Ok(Ok(Routed { english: q.english_text, original_text: q.original_text, lang: q.original_lang, modality: Modality::Text })),
                Err(RouteError::EmptyText) => Ok(Err(ChatError::invalid("text", "must not be empty"))),
                Err(RouteError::Translation { .. }) => Err(Degrade),
            },
            MessageBody::Audio(input) => {
                let blob = match self.audio_blob(input) {
                    Ok(b) => b,
                    Err(e) => return Ok(Err(e)),
                };
                match self.speech.transcribe(&blob) {
                    Ok(t) => Ok(Ok(Routed {
                        original_text: t.original_text.unwrap_or_else(|| t.english_text.clone()),
                        english: t.english_text,
                        lang: t.detected_lang,
                        modality: Modality::Voice,
                    })),
                    Err(SpeechError::Routing(RouteError::Translation { .. }) | SpeechError::Provider(_)) => Err(Degrade),
                    Err(e) => Ok(Err(ChatError::invalid("audio", e))),
                }
            }
        }
    }

    pub fn record_complaint(&self, session_id: Option<String>, text: &str) -> Result<(), ChatError> {
        if text.trim().is_empty() {
            return Err(ChatError::invalid("text", "must not be empty"));
        }
        self.store.record_complaint(session_id, text.to_string(), self.now()).map_err(|e| ChatError::Storage(e.into()))
    }

    pub fn transcript(&self, session_id: &str) -> Option<Transcript> {
        let stored = self.store.get(session_id)?;
        let index = self.engine.index();
        let turns = stored
            .records
            .iter()
            .zip(&stored.session.turns)
            .map(|(r, turn): (&TurnRecord, &ChatTurn)| TranscriptTurn {
                message_id: r.message_id.clone(),
                timestamp: turn.timestamp,
                modality: turn.modality,
                lang: turn.original_lang.clone(),
                question: r.original_text.clone(),
                question_en: turn.question_en.clone(),
                retrieval_query: turn.retrieval_query.clone(),
                answer: r.response.text.clone(),
                answer_lang: r.response.lang.clone(),
                answer_en: turn.answer_en.clone(),
                refused: turn.refused,
                degraded: r.response.degraded,
                audio: r.response.audio.is_some(),
                sources: turn
                    .sources
                    .iter()
                    .map(|id| {
                        let chunk = index.chunk(id);
                        SourceView {
                            chunk_id: id.clone(),
                            doc_id: chunk.map(|c| c.doc_id.clone()).unwrap_or_default(),
                            text: chunk.map(|c| c.text.clone()).unwrap_or_default(),
                        }
                    })
                    .collect(),
            })
            .collect();
        Some(Transcript {
            session_id: stored.session.session_id,
            channel: stored.session.channel,
            created: stored.session.created,
            last_active: stored.session.last_active,
            expired: stored.expired,
            turns,
        })
    }
}

struct Degrade;
