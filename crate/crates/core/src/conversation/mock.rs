//! Deterministic offline LLM that understands the shipped prompt shapes.

use std::collections::BTreeSet;

use super::template::{PromptTemplates, Template, CHAT_HISTORY, CONTEXT, QUESTION};
use super::LlmProvider;
use crate::provider::ProviderError;
use crate::text::{sentence_spans, tokens, CharIndex};

/// What the mock does when no context sentence shares a token with the question.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MockMode {
    /// Reply with the refusal text.
    Grounded,
    /// Reply with the first context sentence anyway.
    AlwaysAnswer,
}

/// Fallback when an always-answer mock is given no context at all.
pub const UNGROUNDED_ANSWER: &str = "Yes, that is covered by company policy.";

#[derive(Debug, Clone)]
pub struct MockLlm {
    qa_shapes: Vec<Template>,
    condense: Template,
    refusal: String,
    mode: MockMode,
}

impl MockLlm {
    pub const NAME: &'static str = "mock-llm";

    pub fn new(templates: &PromptTemplates, mode: MockMode) -> Self {
        Self {
            qa_shapes: vec![templates.qa.clone(), templates.standard.clone(), templates.chain_of_thought.clone()],
            condense: templates.condense.clone(),
            refusal: templates.refusal.clone(),
            mode,
        }
    }

    pub fn grounded(templates: &PromptTemplates) -> Self {
        Self::new(templates, MockMode::Grounded)
    }

    pub fn mode(&self) -> MockMode {
        self.mode
    }

    fn answer(&self, context: &str, question: &str) -> String {
        let q: BTreeSet<String> = tokens(question).into_iter().collect();
        let sentences = context_sentences(context);
        let mut best: Option<(usize, &str)> = None;
        for s in &sentences {
            let overlap = tokens(s).into_iter().collect::<BTreeSet<_>>().intersection(&q).count();
            if overlap > 0 && best.is_none_or(|(b, _)| overlap > b) {
                best = Some((overlap, s));
            }
        }
        match (best, self.mode) {
            (Some((_, s)), _) => s.to_string(),
            (None, MockMode::Grounded) => self.refusal.clone(),
            (None, MockMode::AlwaysAnswer) => sentences.first().map_or(UNGROUNDED_ANSWER.to_string(), |s| s.to_string()),
        }
    }
}

/// Sentences of each context line, trimmed, skipping token-free pieces
/// such as the chunk separator.
fn context_sentences(context: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in context.lines() {
        let idx = CharIndex::new(line);
        for (s, e) in sentence_spans(line) {
            let piece = idx.slice(s, e).trim();
            if !tokens(piece).is_empty() {
                out.push(piece.to_string());
            }
        }
    }
    out
}

/// Follow-up plus the long tokens (4+ chars) of the last history turn,
/// question first, deduplicated, skipping tokens already in the follow-up.
fn condense(history: &str, follow_up: &str) -> String {
    let lines: Vec<&str> = history.lines().collect();
    let last_human = lines.iter().rposition(|l| l.starts_with("Human: "));
    let mut source = String::new();
    if let Some(h) = last_human {
        source.push_str(&lines[h]["Human: ".len()..]);
        if let Some(a) = lines[h + 1..].iter().find_map(|l| l.strip_prefix("Assistant: ")) {
            source.push(' ');
            source.push_str(a);
        }
    }
    let mut seen: BTreeSet<String> = tokens(follow_up).into_iter().collect();
    let salient: Vec<String> =
        tokens(&source).into_iter().filter(|t| t.chars().count() >= 4 && seen.insert(t.clone())).collect();
    let follow_up = follow_up.trim();
    if salient.is_empty() {
        follow_up.to_string()
    } else {
        format!("{follow_up} {}", salient.join(" "))
    }
}

impl LlmProvider for MockLlm {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        if let Some(slots) = self.condense.extract(prompt) {
            return Ok(condense(slots[CHAT_HISTORY], slots[QUESTION]));
        }
        for shape in &self.qa_shapes {
            if let Some(slots) = shape.extract(prompt) {
                return Ok(self.answer(slots[CONTEXT], slots[QUESTION]));
            }
        }
        Err(ProviderError::new(Self::NAME, "unrecognized prompt shape"))
    }
}
