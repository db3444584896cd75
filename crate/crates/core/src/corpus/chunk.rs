//! The five chunking strategies.
//!
//! Every chunker is a pure function of its inputs. Offsets are character
//! offsets into the document text; see [`crate::text`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::Document;
use crate::text::{self, CharIndex};

/// Minimum cosine similarity for a paragraph to join an existing topic cluster.
pub const TOPIC_JOIN_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChunkStrategy {
    FixedWindow,
    Paragraph,
    SemanticUnit,
    Topic,
    Entity,
}

impl ChunkStrategy {
    pub const ALL: [ChunkStrategy; 5] = [
        ChunkStrategy::FixedWindow,
        ChunkStrategy::Paragraph,
        ChunkStrategy::SemanticUnit,
        ChunkStrategy::Topic,
        ChunkStrategy::Entity,
    ];

    /// Whether chunk text is always the exact document slice at its offsets.
    pub fn is_span_preserving(self) -> bool {
        !matches!(self, ChunkStrategy::Topic)
    }

    /// Name used on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            ChunkStrategy::FixedWindow => "fixed",
            ChunkStrategy::Paragraph => "paragraph",
            ChunkStrategy::SemanticUnit => "semantic",
            ChunkStrategy::Topic => "topic",
            ChunkStrategy::Entity => "entity",
        }
    }
}

impl fmt::Display for ChunkStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChunkStrategy::FixedWindow => "FixedWindow",
            ChunkStrategy::Paragraph => "Paragraph",
            ChunkStrategy::SemanticUnit => "SemanticUnit",
            ChunkStrategy::Topic => "Topic",
            ChunkStrategy::Entity => "Entity",
        })
    }
}

impl FromStr for ChunkStrategy {
    type Err = ChunkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ChunkStrategy::ALL
            .into_iter()
            .find(|st| st.cli_name() == s || st.to_string() == s)
            .ok_or_else(|| ChunkError::UnknownStrategy(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChunkError {
    #[error("chunk size must be positive")]
    ZeroSize,
    #[error("overlap {overlap} must be smaller than size {size}")]
    OverlapTooLarge { size: usize, overlap: usize },
    #[error("max_size {max_size} must be positive")]
    ZeroMaxSize { max_size: usize },
    #[error("topic cluster count must be at least 1")]
    ZeroClusters,
    #[error("entity lexicon is empty")]
    EmptyLexicon,
    #[error("invalid heading pattern `{pattern}`: {message}")]
    BadHeadingPattern { pattern: String, message: String },
    #[error("unknown chunking strategy `{0}`")]
    UnknownStrategy(String),
}

/// Window parameters, in characters. Validated on construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkParams {
    size: usize,
    overlap: usize,
    max_size: Option<usize>,
}

impl Default for ChunkParams {
    fn default() -> Self {
        Self { size: 1000, overlap: 200, max_size: None }
    }
}

impl ChunkParams {
    pub fn new(size: usize, overlap: usize) -> Result<Self, ChunkError> {
        if size == 0 {
            return Err(ChunkError::ZeroSize);
        }
        if overlap >= size {
            return Err(ChunkError::OverlapTooLarge { size, overlap });
        }
        Ok(Self { size, overlap, max_size: None })
    }

    /// Sets the cap used by the section and entity chunkers.
    pub fn with_max_size(mut self, max_size: usize) -> Result<Self, ChunkError> {
        if max_size == 0 {
            return Err(ChunkError::ZeroMaxSize { max_size });
        }
        self.max_size = Some(max_size);
        Ok(self)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn overlap(&self) -> usize {
        self.overlap
    }

    pub fn max_size(&self) -> Option<usize> {
        self.max_size
    }

    fn step(&self) -> usize {
        self.size - self.overlap
    }

    /// Sections longer than this are re-split with fixed windows.
    fn section_cap(&self) -> usize {
        self.max_size.unwrap_or(self.size)
    }
}

/// One retrieval unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub doc_id: String,
    pub chunk_id: String,
    pub text: String,
    pub char_start: usize,
    pub char_end: usize,
    pub strategy: ChunkStrategy,
}

impl Chunk {
    pub fn chunk_id_for(doc_id: &str, ordinal: usize) -> String {
        format!("{doc_id}#{ordinal:04}")
    }
}

/// A span with optional synthesized text (only topic chunks synthesize).
struct Piece {
    start: usize,
    end: usize,
    text: Option<String>,
}

impl Piece {
    fn span(start: usize, end: usize) -> Self {
        Self { start, end, text: None }
    }
}

fn assemble(doc_id: &str, idx: &CharIndex<'_>, strategy: ChunkStrategy, pieces: Vec<Piece>) -> Vec<Chunk> {
    pieces
        .into_iter()
        .enumerate()
        .map(|(ordinal, p)| Chunk {
            doc_id: doc_id.to_string(),
            chunk_id: Chunk::chunk_id_for(doc_id, ordinal),
            text: p.text.unwrap_or_else(|| idx.slice(p.start, p.end).to_string()),
            char_start: p.start,
            char_end: p.end,
            strategy,
        })
        .collect()
}

/// Sliding-window spans over a text of `len` characters.
///
/// Windows start at multiples of `size - overlap`; a window is kept only if
/// it ends past the previously kept one, so trailing windows contained in
/// their predecessor are dropped.
pub fn fixed_spans(len: usize, params: &ChunkParams) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut prev_end = 0;
    let mut start = 0;
    while start < len {
        let end = (start + params.size).min(len);
        if end > prev_end {
            spans.push((start, end));
            prev_end = end;
        }
        if end == len {
            break;
        }
        start += params.step();
    }
    spans
}

fn fixed_pieces_within(start: usize, end: usize, params: &ChunkParams) -> impl Iterator<Item = Piece> {
    fixed_spans(end - start, params)
        .into_iter()
        .map(move |(s, e)| Piece::span(start + s, start + e))
}

pub fn chunk_fixed(doc_id: &str, text: &str, params: &ChunkParams) -> Vec<Chunk> {
    let idx = CharIndex::new(text);
    let pieces = fixed_pieces_within(0, idx.len(), params).collect();
    assemble(doc_id, &idx, ChunkStrategy::FixedWindow, pieces)
}

/// Paragraphs greedily merged while the merged span fits in `size`.
/// A single paragraph longer than `size` is split with fixed windows.
pub fn chunk_paragraph(doc_id: &str, text: &str, params: &ChunkParams) -> Vec<Chunk> {
    let idx = CharIndex::new(text);
    let mut pieces = Vec::new();
    let mut group: Option<(usize, usize)> = None;
    for (s, e) in text::paragraph_spans(text) {
        if e - s > params.size {
            if let Some((gs, ge)) = group.take() {
                pieces.push(Piece::span(gs, ge));
            }
            pieces.extend(fixed_pieces_within(s, e, params));
            continue;
        }
        group = match group {
            Some((gs, _)) if e - gs <= params.size => Some((gs, e)),
            Some((gs, ge)) => {
                pieces.push(Piece::span(gs, ge));
                Some((s, e))
            }
            None => Some((s, e)),
        };
    }
    if let Some((gs, ge)) = group {
        pieces.push(Piece::span(gs, ge));
    }
    assemble(doc_id, &idx, ChunkStrategy::Paragraph, pieces)
}

/// A line-start pattern that marks a section heading.
#[derive(Debug, Clone)]
pub struct HeadingPattern(Regex);

impl HeadingPattern {
    /// A regular expression, implicitly anchored at the start of the line.
    pub fn regex(pattern: &str) -> Result<Self, ChunkError> {
        Regex::new(&format!("^(?:{pattern})"))
            .map(Self)
            .map_err(|e| ChunkError::BadHeadingPattern {
                pattern: pattern.to_string(),
                message: e.to_string(),
            })
    }

    /// A literal line prefix.
    pub fn prefix(literal: &str) -> Self {
        Self(Regex::new(&format!("^{}", regex::escape(literal))).expect("escaped literal is a valid regex"))
    }

    /// Markdown `#` headings, `Step ` lines and `1.`-style numbered lines.
    pub fn defaults() -> Vec<Self> {
        vec![
            Self::regex(r"#{1,6}\s").unwrap(),
            Self::prefix("Step "),
            Self::regex(r"\d+\.\s").unwrap(),
        ]
    }

    pub fn matches(&self, line: &str) -> bool {
        self.0.is_match(line)
    }
}

/// One chunk per section; a section runs from a heading line to the next.
/// Sections longer than the section cap (`max_size`, else `size`) are split
/// with fixed windows. Text before the first heading forms its own section.
pub fn chunk_semantic_unit(doc_id: &str, text: &str, patterns: &[HeadingPattern], params: &ChunkParams) -> Vec<Chunk> {
    let idx = CharIndex::new(text);
    let chars: Vec<char> = text.chars().collect();
    let lines = text::line_spans(text);
    let mut bounds: Vec<usize> = lines
        .iter()
        .filter(|&&(s, e)| {
            let line = idx.slice(s, e);
            patterns.iter().any(|p| p.matches(line))
        })
        .map(|&(s, _)| s)
        .collect();
    if bounds.first() != Some(&0) {
        bounds.insert(0, 0);
    }
    bounds.push(idx.len());

    let mut pieces = Vec::new();
    for w in bounds.windows(2) {
        let Some((s, e)) = text::trim_span(&chars, w[0], w[1]) else {
            continue;
        };
        if e - s > params.section_cap() {
            pieces.extend(fixed_pieces_within(s, e, params));
        } else {
            pieces.push(Piece::span(s, e));
        }
    }
    assemble(doc_id, &idx, ChunkStrategy::SemanticUnit, pieces)
}

type TermVector = BTreeMap<String, f64>;

fn term_vector(text: &str) -> TermVector {
    let mut v = TermVector::new();
    for t in text::tokens(text) {
        *v.entry(t).or_insert(0.0) += 1.0;
    }
    v
}

fn cosine(a: &TermVector, b: &TermVector) -> f64 {
    let dot: f64 = a.iter().filter_map(|(t, x)| b.get(t).map(|y| x * y)).sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn add_into(acc: &mut TermVector, other: &TermVector) {
    for (t, x) in other {
        *acc.entry(t.clone()).or_insert(0.0) += x;
    }
}

/// Groups paragraphs into at most `k` term-frequency clusters.
///
/// Each paragraph joins the most similar existing cluster when the cosine
/// similarity is at least [`TOPIC_JOIN_THRESHOLD`], otherwise it opens a new
/// one; then the two most similar clusters are merged until `k` remain.
/// A cluster's chunk joins its paragraphs with a blank line and records the
/// span from its first to its last paragraph.
pub fn chunk_topic(doc_id: &str, text: &str, k: usize, _params: &ChunkParams) -> Result<Vec<Chunk>, ChunkError> {
    if k == 0 {
        return Err(ChunkError::ZeroClusters);
    }
    let idx = CharIndex::new(text);
    let paragraphs = text::paragraph_spans(text);
    let vectors: Vec<TermVector> = paragraphs.iter().map(|&(s, e)| term_vector(idx.slice(s, e))).collect();

    // (member paragraph indices, summed term vector)
    let mut clusters: Vec<(Vec<usize>, TermVector)> = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        let best = clusters
            .iter()
            .enumerate()
            .map(|(c, (_, cv))| (c, cosine(v, cv)))
            .fold(None, |best: Option<(usize, f64)>, (c, sim)| match best {
                Some((_, b)) if b >= sim => best,
                _ => Some((c, sim)),
            });
        match best {
            Some((c, sim)) if sim >= TOPIC_JOIN_THRESHOLD => {
                clusters[c].0.push(i);
                add_into(&mut clusters[c].1, v);
            }
            _ => clusters.push((vec![i], v.clone())),
        }
    }

    while clusters.len() > k {
        let mut best = (0, 1, f64::NEG_INFINITY);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let sim = cosine(&clusters[a].1, &clusters[b].1);
                if sim > best.2 {
                    best = (a, b, sim);
                }
            }
        }
        let (a, b, _) = best;
        let (members, vector) = clusters.remove(b);
        clusters[a].0.extend(members);
        clusters[a].0.sort_unstable();
        add_into(&mut clusters[a].1, &vector);
    }

    clusters.sort_by_key(|(members, _)| members[0]);
    let pieces = clusters
        .into_iter()
        .map(|(members, _)| {
            let start = paragraphs[members[0]].0;
            let end = paragraphs[*members.last().unwrap()].1;
            let body = members
                .iter()
                .map(|&m| idx.slice(paragraphs[m].0, paragraphs[m].1))
                .collect::<Vec<_>>()
                .join("\n\n");
            Piece { start, end, text: Some(body) }
        })
        .collect();
    Ok(assemble(doc_id, &idx, ChunkStrategy::Topic, pieces))
}

/// Case-insensitive whole-word terms for the entity chunker.
#[derive(Debug, Clone)]
pub struct EntityLexicon {
    terms: Vec<(String, Regex)>,
}

impl EntityLexicon {
    pub fn new<I, S>(terms: I) -> Result<Self, ChunkError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = Vec::new();
        let mut out = Vec::new();
        for term in terms {
            let term = term.as_ref().trim().to_lowercase();
            if term.is_empty() || seen.contains(&term) {
                continue;
            }
            let re = Regex::new(&format!(r"(?i)\b{}\b", regex::escape(&term))).expect("escaped term is a valid regex");
            seen.push(term.clone());
            out.push((term, re));
        }
        if out.is_empty() {
            return Err(ChunkError::EmptyLexicon);
        }
        Ok(Self { terms: out })
    }

    /// One term per line; blank lines and `#` comments are skipped.
    pub fn parse(contents: &str) -> Result<Self, ChunkError> {
        Self::new(contents.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')))
    }

    /// The HR/QA lexicon shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(include_str!("../../data/entity_lexicon.txt")).expect("bundled lexicon is non-empty")
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(|(t, _)| t.as_str())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Sentence windows around entity occurrences plus fixed-window residue.
///
/// Each occurrence of a lexicon term yields the full sentences covering
/// `size / 2` characters either side of it; overlapping windows for the same
/// term are merged. Stretches no window covers are split with fixed windows,
/// so every non-whitespace character lands in some chunk. Merged windows
/// longer than `max_size` (when set) are re-split with fixed windows.
pub fn chunk_entity(doc_id: &str, text: &str, lexicon: &EntityLexicon, params: &ChunkParams) -> Vec<Chunk> {
    let idx = CharIndex::new(text);
    let n = idx.len();
    let sentences = text::sentence_spans(text);
    let half = params.size / 2;

    let mut windows: Vec<(usize, usize)> = Vec::new();
    for (_, re) in &lexicon.terms {
        let mut term_windows: Vec<(usize, usize)> = Vec::new();
        for m in re.find_iter(text) {
            let occ = idx.char_offset(m.start());
            let occ_end = idx.char_offset(m.end());
            let lo = occ.saturating_sub(half);
            let hi = (occ + half).max(occ_end).min(n);
            let first = sentences.iter().position(|&(_, e)| e > lo);
            let last = sentences.iter().rposition(|&(s, _)| s < hi);
            let (Some(first), Some(last)) = (first, last) else {
                continue;
            };
            let window = (sentences[first].0.min(occ), sentences[last].1.max(occ_end));
            match term_windows.last_mut() {
                Some(prev) if window.0 < prev.1 => prev.1 = prev.1.max(window.1),
                _ => term_windows.push(window),
            }
        }
        windows.extend(term_windows);
    }

    let mut pieces: Vec<Piece> = Vec::new();
    for &(s, e) in &windows {
        match params.max_size {
            Some(cap) if e - s > cap => pieces.extend(fixed_pieces_within(s, e, params)),
            _ => pieces.push(Piece::span(s, e)),
        }
    }

    let chars: Vec<char> = text.chars().collect();
    let mut covered: Vec<(usize, usize)> = windows.clone();
    covered.sort_unstable();
    let mut cursor = 0;
    let mut gaps = Vec::new();
    for (s, e) in covered {
        if s > cursor {
            gaps.push((cursor, s));
        }
        cursor = cursor.max(e);
    }
    if cursor < n {
        gaps.push((cursor, n));
    }
    for (s, e) in gaps {
        if text::trim_span(&chars, s, e).is_some() {
            pieces.extend(fixed_pieces_within(s, e, params));
        }
    }

    pieces.sort_by_key(|p| (p.start, p.end));
    pieces.dedup_by_key(|p| (p.start, p.end));
    assemble(doc_id, &idx, ChunkStrategy::Entity, pieces)
}

/// A configured strategy, ready to chunk whole documents.
#[derive(Debug, Clone)]
pub struct Chunker {
    pub strategy: ChunkStrategy,
    pub params: ChunkParams,
    pub headings: Vec<HeadingPattern>,
    pub lexicon: EntityLexicon,
    /// Fixed cluster count for the topic strategy; by default one cluster per
    /// `size` characters of document text.
    pub topic_clusters: Option<usize>,
}

impl Chunker {
    pub fn new(strategy: ChunkStrategy, params: ChunkParams) -> Self {
        Self {
            strategy,
            params,
            headings: HeadingPattern::defaults(),
            lexicon: EntityLexicon::builtin(),
            topic_clusters: None,
        }
    }

    pub fn topic_clusters_for(&self, text: &str) -> usize {
        self.topic_clusters
            .unwrap_or_else(|| text::char_len(text).div_ceil(self.params.size))
            .max(1)
    }

    pub fn chunk(&self, doc: &Document) -> Vec<Chunk> {
        let (id, text, p) = (doc.doc_id.as_str(), doc.text.as_str(), &self.params);
        match self.strategy {
            ChunkStrategy::FixedWindow => chunk_fixed(id, text, p),
            ChunkStrategy::Paragraph => chunk_paragraph(id, text, p),
            ChunkStrategy::SemanticUnit => chunk_semantic_unit(id, text, &self.headings, p),
            ChunkStrategy::Topic => {
                chunk_topic(id, text, self.topic_clusters_for(text), p).expect("cluster count is at least 1")
            }
            ChunkStrategy::Entity => chunk_entity(id, text, &self.lexicon, p),
        }
    }
}
