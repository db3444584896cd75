//! Sessions, question condensation, grounded prompting and the refusal guard.

mod mock;
mod template;

pub use mock::{MockLlm, MockMode, UNGROUNDED_ANSWER};
pub use template::{PromptTemplates, Template, TemplateError, CHAT_HISTORY, CONTEXT, CONTEXT_SEPARATOR, QUESTION};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::index::{Embedder, Index, IndexError, ScoredChunk};
use crate::lang::{select_provider, Capability, LangTag, ProviderProfile, SelectionError};
use crate::provider::{InFlightLimit, ProviderError, DEFAULT_MAX_IN_FLIGHT};

pub const DEFAULT_GROUNDING_THRESHOLD: f64 = 0.15;
pub const DEFAULT_HISTORY_WINDOW: usize = 5;

pub trait LlmProvider: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, prompt: &str) -> Result<String, ProviderError>;
}

pub fn select_llm(profiles: &[ProviderProfile]) -> Result<ProviderProfile, SelectionError> {
    select_provider(profiles, Capability::Llm, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modality {
    Text,
    Voice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    Web,
    Webhook,
    #[serde(rename = "CLI")]
    Cli,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Web, Channel::Webhook, Channel::Cli];
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Web => "Web",
            Channel::Webhook => "Webhook",
            Channel::Cli => "CLI",
        })
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "web" => Ok(Channel::Web),
            "webhook" => Ok(Channel::Webhook),
            "cli" => Ok(Channel::Cli),
            _ => Err(format!("unknown channel `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatTurn {
    /// The user's question, routed to English.
    pub question_en: String,
    /// Standalone form of the question that was sent to retrieval.
    pub retrieval_query: String,
    pub answer_en: String,
    pub sources: Vec<String>,
    pub refused: bool,
    pub timestamp: DateTime<Utc>,
    pub modality: Modality,
    pub original_lang: LangTag,
    /// Some step fell back (condensation failed, or the LLM failed).
    #[serde(default)]
    pub degraded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub channel: Channel,
    pub turns: Vec<ChatTurn>,
    pub created: DateTime<Utc>,
    pub last_active: DateTime<Utc>,
}

impl Session {
    pub fn new(session_id: impl Into<String>, channel: Channel, now: DateTime<Utc>) -> Self {
        Self { session_id: session_id.into(), channel, turns: Vec::new(), created: now, last_active: now }
    }

    /// The last `h` turns.
    pub fn window(&self, h: usize) -> &[ChatTurn] {
        &self.turns[self.turns.len().saturating_sub(h)..]
    }

    /// Appends, clamping the timestamp so turns never go backwards.
    pub fn push_turn(&mut self, mut turn: ChatTurn) {
        if let Some(last) = self.turns.last() {
            turn.timestamp = turn.timestamp.max(last.timestamp);
        }
        self.last_active = self.last_active.max(turn.timestamp);
        self.turns.push(turn);
    }
}

/// Context = chunk texts in score order, joined by [`CONTEXT_SEPARATOR`].
pub fn assemble_qa_prompt(template: &Template, chunks: &[ScoredChunk], question_en: &str) -> String {
    let context = chunks.iter().map(|c| c.chunk.text.as_str()).collect::<Vec<_>>().join(CONTEXT_SEPARATOR);
    template.render(&[(CONTEXT, &context), (QUESTION, question_en)])
}

/// Alternating `Human:` / `Assistant:` lines; newlines inside a turn become spaces.
pub fn render_history(turns: &[ChatTurn]) -> String {
    let flat = |s: &str| s.split(['\r', '\n']).filter(|l| !l.is_empty()).collect::<Vec<_>>().join(" ");
    turns
        .iter()
        .map(|t| format!("Human: {}\nAssistant: {}", flat(&t.question_en), flat(&t.answer_en)))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn render_condense_prompt(template: &Template, history: &[ChatTurn], follow_up_en: &str) -> String {
    template.render(&[(CHAT_HISTORY, &render_history(history)), (QUESTION, follow_up_en)])
}

/// A standalone question; `degraded` when the LLM failed and the raw
/// follow-up is returned instead.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condensed {
    pub question: String,
    pub degraded: bool,
}

/// `history` should already be windowed. Empty history makes no LLM call.
pub fn condense_question(template: &Template, history: &[ChatTurn], follow_up_en: &str, llm: &dyn LlmProvider) -> Condensed {
    if history.is_empty() {
        return Condensed { question: follow_up_en.to_string(), degraded: false };
    }
    match llm.complete(&render_condense_prompt(template, history, follow_up_en)) {
        Ok(out) if !out.trim().is_empty() => Condensed { question: out.trim().to_string(), degraded: false },
        _ => Condensed { question: follow_up_en.to_string(), degraded: true },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub retrieval_k: usize,
    /// Minimum top retrieval score to call the LLM; `None` disables the guard.
    pub grounding_threshold: Option<f64>,
    pub history_window: usize,
    pub llm_max_in_flight: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            retrieval_k: crate::index::DEFAULT_K,
            grounding_threshold: Some(DEFAULT_GROUNDING_THRESHOLD),
            history_window: DEFAULT_HISTORY_WINDOW,
            llm_max_in_flight: DEFAULT_MAX_IN_FLIGHT,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("retrieval failed: {0}")]
    Retrieval(#[from] IndexError),
    /// The LLM failed after grounding; `turn` is a degraded stand-in that
    /// should not be recorded.
    #[error("LLM unavailable: {source}")]
    Llm { source: ProviderError, turn: Box<ChatTurn> },
}

/// Per-turn facts the engine does not derive itself.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnMeta {
    pub modality: Modality,
    pub original_lang: LangTag,
    pub now: DateTime<Utc>,
}

impl TurnMeta {
    pub fn text_en(now: DateTime<Utc>) -> Self {
        Self { modality: Modality::Text, original_lang: LangTag::en(), now }
    }
}

/// Shown to the user when the LLM cannot be reached.
pub const UNAVAILABLE_TEXT: &str = "The answering service is unavailable right now. Please try again shortly.";

#[derive(Clone)]
pub struct ConversationEngine {
    index: Arc<Index>,
    embedder: Arc<dyn Embedder>,
    llm: Arc<dyn LlmProvider>,
    templates: Arc<PromptTemplates>,
    qa_template: Template,
    config: EngineConfig,
    llm_limit: Arc<InFlightLimit>,
}

impl fmt::Debug for ConversationEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConversationEngine")
            .field("index_size", &self.index.len())
            .field("embedder", &self.embedder.name())
            .field("llm", &self.llm.name())
            .field("config", &self.config)
            .finish()
    }
}

impl ConversationEngine {
    pub fn new(
        index: Arc<Index>,
        embedder: Arc<dyn Embedder>,
        llm: Arc<dyn LlmProvider>,
        templates: PromptTemplates,
        config: EngineConfig,
    ) -> Self {
        let llm_limit = Arc::new(InFlightLimit::new(config.llm_max_in_flight.max(1)));
        let qa_template = templates.qa.clone();
        Self { index, embedder, llm, templates: Arc::new(templates), qa_template, config, llm_limit }
    }

    /// Same engine, answering with a different QA template (evaluation variants).
    pub fn with_qa_template(mut self, template: Template) -> Self {
        self.qa_template = template;
        self
    }

    pub fn with_grounding_threshold(mut self, threshold: Option<f64>) -> Self {
        self.config.grounding_threshold = threshold;
        self
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn templates(&self) -> &PromptTemplates {
        &self.templates
    }

    pub fn index(&self) -> &Index {
        &self.index
    }

    pub fn llm_name(&self) -> &str {
        self.llm.name()
    }

    pub fn retrieve(&self, query: &str) -> Result<Vec<ScoredChunk>, IndexError> {
        self.index.search_text(self.embedder.as_ref(), query, self.config.retrieval_k)
    }

    /// Answers `question_en` given prior turns. Does not record anything.
    pub fn answer(&self, history: &[ChatTurn], question_en: &str, meta: TurnMeta) -> Result<ChatTurn, EngineError> {
        let question_en = question_en.trim();
        if question_en.is_empty() {
            return Err(EngineError::EmptyQuestion);
        }
        let window = &history[history.len().saturating_sub(self.config.history_window)..];
        let condensed = self.llm_limit.run(|| condense_question(&self.templates.condense, window, question_en, self.llm.as_ref()));
        let hits = self.retrieve(&condensed.question)?;
        let mut turn = ChatTurn {
            question_en: question_en.to_string(),
            retrieval_query: condensed.question.clone(),
            answer_en: self.templates.refusal.clone(),
            sources: Vec::new(),
            refused: true,
            timestamp: meta.now,
            modality: meta.modality,
            original_lang: meta.original_lang,
            degraded: condensed.degraded,
        };
        let top = hits.first().map(|h| h.score);
        let grounded = match (self.config.grounding_threshold, top) {
            (_, None) => false,
            (Some(theta), Some(score)) => score >= theta,
            (None, Some(_)) => true,
        };
        if !grounded {
            return Ok(turn);
        }
        let prompt = assemble_qa_prompt(&self.qa_template, &hits, &condensed.question);
        match self.llm_limit.run(|| self.llm.complete(&prompt)) {
            Ok(answer) => {
                let answer = answer.trim().to_string();
                turn.refused = answer == self.templates.refusal;
                if !turn.refused {
                    turn.sources = hits.iter().map(|h| h.chunk.chunk_id.clone()).collect();
                }
                turn.answer_en = answer;
                Ok(turn)
            }
            Err(source) => {
                turn.answer_en = UNAVAILABLE_TEXT.to_string();
                turn.refused = false;
                turn.degraded = true;
                turn.sources = hits.iter().map(|h| h.chunk.chunk_id.clone()).collect();
                Err(EngineError::Llm { source, turn: Box::new(turn) })
            }
        }
    }

    /// Answers within `session` and appends the turn on success.
    pub fn answer_in(&self, session: &mut Session, question_en: &str, meta: TurnMeta) -> Result<ChatTurn, EngineError> {
        let turn = self.answer(&session.turns, question_en, meta)?;
        session.push_turn(turn.clone());
        Ok(session.turns.last().cloned().unwrap_or(turn))
    }
}
