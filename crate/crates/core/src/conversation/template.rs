//! Prompt templates with `{name}` placeholders.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

pub const CONTEXT: &str = "context";
pub const QUESTION: &str = "question";
pub const CHAT_HISTORY: &str = "chat_history";

/// Separator placed between retrieved chunk texts in `{context}`.
pub const CONTEXT_SEPARATOR: &str = "\n\n---\n\n";

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Literal(String),
    Slot(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("template `{template}`: unknown placeholder {{{name}}}")]
    UnknownPlaceholder { template: String, name: String },
    #[error("template `{template}` is missing placeholder {{{name}}}")]
    MissingPlaceholder { template: String, name: String },
    #[error("template `{template}`: placeholder {{{name}}} appears twice")]
    RepeatedPlaceholder { template: String, name: String },
    #[error("template `{template}`: placeholders must be separated by text")]
    AdjacentPlaceholders { template: String },
    #[error("template file {path}: {message}")]
    File { path: String, message: String },
}

/// A parsed template. Only the placeholder names it was built with are
/// recognised; any other brace text is literal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    name: String,
    source: String,
    pieces: Vec<Piece>,
}

impl Template {
    /// `slots` lists the placeholders that must each appear exactly once.
    pub fn parse(name: &str, source: &str, slots: &[&str]) -> Result<Self, TemplateError> {
        let mut pieces = Vec::new();
        let mut literal = String::new();
        let mut rest = source;
        let mut seen: Vec<&str> = Vec::new();
        while let Some(open) = rest.find('{') {
            let after = &rest[open + 1..];
            let close = after.find('}');
            let candidate = close.map(|c| &after[..c]);
            match candidate {
                Some(id) if !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') => {
                    let Some(slot) = slots.iter().find(|s| **s == id) else {
                        return Err(TemplateError::UnknownPlaceholder { template: name.into(), name: id.into() });
                    };
                    if seen.contains(slot) {
                        return Err(TemplateError::RepeatedPlaceholder { template: name.into(), name: id.into() });
                    }
                    seen.push(slot);
                    literal.push_str(&rest[..open]);
                    if literal.is_empty() && matches!(pieces.last(), Some(Piece::Slot(_))) {
                        return Err(TemplateError::AdjacentPlaceholders { template: name.into() });
                    }
                    pieces.push(Piece::Literal(std::mem::take(&mut literal)));
                    pieces.push(Piece::Slot(id.to_string()));
                    rest = &after[id.len() + 1..];
                }
                _ => {
                    literal.push_str(&rest[..=open]);
                    rest = after;
                }
            }
        }
        literal.push_str(rest);
        pieces.push(Piece::Literal(literal));
        if let Some(missing) = slots.iter().find(|s| !seen.contains(s)) {
            return Err(TemplateError::MissingPlaceholder { template: name.into(), name: (*missing).into() });
        }
        Ok(Self { name: name.into(), source: source.into(), pieces })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Single pass: substituted values are never rescanned for placeholders.
    pub fn render(&self, values: &[(&str, &str)]) -> String {
        let mut out = String::new();
        for piece in &self.pieces {
            match piece {
                Piece::Literal(s) => out.push_str(s),
                Piece::Slot(slot) => {
                    let value = values.iter().find(|(k, _)| k == slot).map_or("", |(_, v)| *v);
                    out.push_str(value);
                }
            }
        }
        out
    }

    /// Inverse of [`Template::render`]. Interior separators are matched at
    /// their last occurrence, so earlier slots may contain separator text.
    pub fn extract<'a>(&self, prompt: &'a str) -> Option<BTreeMap<String, &'a str>> {
        let mut literals = Vec::new();
        let mut slots = Vec::new();
        for piece in &self.pieces {
            match piece {
                Piece::Literal(s) => literals.push(s.as_str()),
                Piece::Slot(s) => slots.push(s.as_str()),
            }
        }
        let head = literals[0];
        let tail = literals[literals.len() - 1];
        if slots.is_empty() {
            return (prompt == head).then(BTreeMap::new);
        }
        let body = prompt.strip_prefix(head)?.strip_suffix(tail)?;
        let mut out = BTreeMap::new();
        let mut end = body.len();
        // Walk right to left: the slot after each interior literal runs to `end`.
        for i in (1..slots.len()).rev() {
            let sep = literals[i];
            let at = body[..end].rfind(sep)?;
            out.insert(slots[i].to_string(), &body[at + sep.len()..end]);
            end = at;
        }
        out.insert(slots[0].to_string(), &body[..end]);
        Some(out)
    }
}

/// The serving templates plus the evaluation-only variants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    pub qa: Template,
    pub condense: Template,
    pub refusal: String,
    pub standard: Template,
    pub chain_of_thought: Template,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TemplateFile {
    qa: String,
    condense: String,
    refusal: String,
    standard: Option<String>,
    chain_of_thought: Option<String>,
}

const BUILTIN: &str = include_str!("../../data/templates.toml");

impl PromptTemplates {
    /// TOML with string keys `qa`, `condense`, `refusal`, and optionally
    /// `standard` and `chain_of_thought` (built-ins are used when absent).
    pub fn parse(contents: &str) -> Result<Self, TemplateError> {
        Self::parse_named(contents, "<inline>")
    }

    fn parse_named(contents: &str, path: &str) -> Result<Self, TemplateError> {
        let file: TemplateFile =
            toml::from_str(contents).map_err(|e| TemplateError::File { path: path.into(), message: e.to_string() })?;
        let builtin: Option<TemplateFile> = (contents != BUILTIN).then(|| toml::from_str(BUILTIN).expect("bundled templates parse"));
        let pick = |own: Option<String>, fallback: fn(&TemplateFile) -> Option<String>| -> String {
            own.or_else(|| builtin.as_ref().and_then(fallback)).unwrap_or_default()
        };
        let refusal = file.refusal.trim().to_string();
        if refusal.is_empty() {
            return Err(TemplateError::File { path: path.into(), message: "refusal text is empty".into() });
        }
        let qa_slots = [CONTEXT, QUESTION];
        Ok(Self {
            qa: Template::parse("qa", &file.qa, &qa_slots)?,
            condense: Template::parse("condense", &file.condense, &[CHAT_HISTORY, QUESTION])?,
            refusal,
            standard: Template::parse("standard", &pick(file.standard, |b| b.standard.clone()), &qa_slots)?,
            chain_of_thought: Template::parse(
                "chain_of_thought",
                &pick(file.chain_of_thought, |b| b.chain_of_thought.clone()),
                &qa_slots,
            )?,
        })
    }

    pub fn load(path: &Path) -> Result<Self, TemplateError> {
        let contents = std::fs::read_to_string(path)
            .map_err(|e| TemplateError::File { path: path.display().to_string(), message: e.to_string() })?;
        Self::parse_named(&contents, &path.display().to_string())
    }

    pub fn builtin() -> Self {
        Self::parse_named(BUILTIN, "<builtin>").expect("bundled templates are valid")
    }
}

impl Default for PromptTemplates {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_and_extract_roundtrip() {
        let t = Template::parse("t", "A {x} B {y} C", &["x", "y"]).unwrap();
        let s = t.render(&[("x", "1 B 2"), ("y", "{x}")]);
        assert_eq!(s, "A 1 B 2 B {x} C");
        let got = t.extract(&s).unwrap();
        assert_eq!(got["x"], "1 B 2");
        assert_eq!(got["y"], "{x}");
        assert!(t.extract("nope").is_none());
    }

    #[test]
    fn rejects_bad_templates() {
        assert!(matches!(Template::parse("t", "{x}{y}", &["x", "y"]), Err(TemplateError::AdjacentPlaceholders { .. })));
        assert!(matches!(Template::parse("t", "{x} {z}", &["x"]), Err(TemplateError::UnknownPlaceholder { .. })));
        assert!(matches!(Template::parse("t", "{x} {x}", &["x"]), Err(TemplateError::RepeatedPlaceholder { .. })));
        assert!(matches!(Template::parse("t", "no slots", &["x"]), Err(TemplateError::MissingPlaceholder { .. })));
        // non-identifier braces are literal
        let t = Template::parse("t", "{ a } {x}", &["x"]).unwrap();
        assert_eq!(t.render(&[("x", "1")]), "{ a } 1");
    }

    #[test]
    fn builtin_templates_carry_exact_wording() {
        let t = PromptTemplates::builtin();
        assert!(t.qa.source().starts_with("You are a helpful AI assistant. Use the following pieces of context"));
        assert!(t.qa.source().contains("DO NOT try to make up an answer."));
        assert!(t.condense.source().ends_with("Standalone question:"));
        assert_eq!(t.refusal, "I am tuned to only answer questions related to the provided context.");
    }

    #[test]
    fn partial_file_falls_back_for_variants() {
        let t = PromptTemplates::parse("qa = \"Q {context} {question}\"\ncondense = \"{chat_history} / {question}\"\nrefusal = \"no\"\n").unwrap();
        assert_eq!(t.standard, PromptTemplates::builtin().standard);
        assert!(PromptTemplates::parse("qa = \"x\"\ncondense = \"{chat_history} {question}\"\nrefusal = \"no\"").is_err());
    }
}
