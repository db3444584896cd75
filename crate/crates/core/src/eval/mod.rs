//! Desk-scale comparison experiments over a labelled corpus, emitted as
//! markdown and CSV tables.

pub mod synth;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use chrono::{TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::conversation::{ConversationEngine, EngineConfig, EngineError, MockLlm, MockMode, PromptTemplates, Template, TurnMeta};
use crate::corpus::{ingest_documents, load_corpus, Chunk, ChunkParams, ChunkStrategy, Chunker, CorpusError, Document};
use crate::index::{Embedder, HashEmbedder, Index, IndexError};
use crate::lang::{fixtures, parse_profiles, select_provider, Capability, ProfileError, ProviderProfile, SelectionError};
use crate::text::{sentence_spans, tokens, CharIndex};

pub use synth::{generate, SynthConfig, SynthDoc, SynthError, SyntheticSuite, DEFAULT_SEED};

pub const QA_FILE: &str = "qa.jsonl";
pub const MANIFEST_FILE: &str = "manifest.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAPair {
    pub question: String,
    /// Chunks containing the answer under the default fixed-window store.
    pub expected_chunk_ids: Vec<String>,
    pub expected_answer_substring: String,
    /// `false` means the question should be refused.
    pub in_context: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_id: Option<String>,
    /// Character span of the answer in its document.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_end: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Profiles(#[from] ProfileError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error("{path}: {message}")]
    File { path: String, message: String },
    #[error("{path} line {line}: {message}")]
    QaLine { path: String, line: usize, message: String },
    #[error("cannot emit an empty report")]
    EmptyReport,
    #[error("unknown suite `{0}` (expected chunking, prompts, providers or all)")]
    UnknownSuite(String),
}

fn file_err(path: &Path, e: impl fmt::Display) -> EvalError {
    EvalError::File { path: path.display().to_string(), message: e.to_string() }
}

pub fn load_qa(path: &Path) -> Result<Vec<QAPair>, EvalError> {
    let contents = fs::read_to_string(path).map_err(|e| file_err(path, e))?;
    let mut out = Vec::new();
    for (i, line) in contents.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let pair: QAPair = serde_json::from_str(line).map_err(|e| EvalError::QaLine {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if pair.in_context && pair.expected_chunk_ids.is_empty() {
            return Err(EvalError::QaLine {
                path: path.display().to_string(),
                line: i + 1,
                message: "in-context question has no expected chunks".into(),
            });
        }
        out.push(pair);
    }
    Ok(out)
}

pub fn qa_jsonl(pairs: &[QAPair]) -> String {
    pairs.iter().map(|p| serde_json::to_string(p).expect("QAPair serializes") + "\n").collect()
}

/// Writes documents, `manifest.csv` and `qa.jsonl` into `dir`.
pub fn write_suite(suite: &SyntheticSuite, dir: &Path) -> Result<(), EvalError> {
    fs::create_dir_all(dir).map_err(|e| file_err(dir, e))?;
    let mut manifest = String::from("file,collection\n");
    for d in &suite.docs {
        let path = dir.join(&d.file_name);
        fs::write(&path, &d.document.text).map_err(|e| file_err(&path, e))?;
        manifest.push_str(&format!("{},{}\n", d.file_name, d.document.collection));
    }
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest).map_err(|e| file_err(&path, e))?;
    let path = dir.join(QA_FILE);
    fs::write(&path, qa_jsonl(&suite.qa)).map_err(|e| file_err(&path, e))?;
    Ok(())
}

/// A corpus directory with its labelled questions.
#[derive(Debug, Clone)]
pub struct EvalCorpus {
    pub documents: Vec<Document>,
    pub qa: Vec<QAPair>,
}

impl EvalCorpus {
    /// Reads `dir` (manifest used when present) and `dir/qa.jsonl`.
    pub fn load(dir: &Path) -> Result<Self, EvalError> {
        let manifest = dir.join(MANIFEST_FILE);
        let loaded = load_corpus(dir, manifest.exists().then_some(manifest.as_path()))?;
        if let Some(f) = loaded.failures.first() {
            return Err(file_err(&f.path, &f.message));
        }
        Ok(Self { documents: loaded.documents, qa: load_qa(&dir.join(QA_FILE))? })
    }

    pub fn from_suite(suite: &SyntheticSuite) -> Self {
        Self { documents: suite.docs.iter().map(|d| d.document.clone()).collect(), qa: suite.qa.clone() }
    }

    pub fn in_context(&self) -> impl Iterator<Item = &QAPair> {
        self.qa.iter().filter(|q| q.in_context)
    }

    pub fn off_topic(&self) -> impl Iterator<Item = &QAPair> {
        self.qa.iter().filter(|q| !q.in_context)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    /// Rendered with three decimals.
    Rate(f64),
    Int(u64),
    /// Rendered with the shortest round-trip representation.
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Rate(v) | Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            Cell::Text(_) => None,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Rate(v) => write!(f, "{v:.3}"),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Num(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub name: String,
    pub metrics: BTreeMap<String, Cell>,
}

impl ReportRow {
    pub fn get(&self, column: &str) -> Option<&Cell> {
        self.metrics.get(column)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub title: String,
    /// Header of the row-name column.
    pub name_column: String,
    /// Metric columns in output order.
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    fn new(title: &str, name_column: &str, columns: &[&str]) -> Self {
        Self {
            title: title.into(),
            name_column: name_column.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, name: impl Into<String>, cells: Vec<(&str, Cell)>) {
        let metrics = cells.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        self.rows.push(ReportRow { name: name.into(), metrics });
    }

    pub fn row(&self, name: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn header(&self) -> Vec<&str> {
        std::iter::once(self.name_column.as_str()).chain(self.columns.iter().map(String::as_str)).collect()
    }

    fn record(&self, row: &ReportRow) -> Vec<String> {
        std::iter::once(row.name.clone())
            .chain(self.columns.iter().map(|c| row.get(c).map_or_else(String::new, Cell::to_string)))
            .collect()
    }

    pub fn to_markdown(&self) -> Result<String, EvalError> {
        if self.rows.is_empty() {
            return Err(EvalError::EmptyReport);
        }
        let esc = |s: &str| s.replace('|', "\\|");
        let line = |cells: Vec<String>| format!("| {} |\n", cells.iter().map(|c| esc(c)).collect::<Vec<_>>().join(" | "));
        let mut out = format!("# {}\n\n", self.title);
        out.push_str(&line(self.header().into_iter().map(String::from).collect()));
        out.push_str(&format!("|{}\n", "---|".repeat(self.columns.len() + 1)));
        for row in &self.rows {
            out.push_str(&line(self.record(row)));
        }
        Ok(out)
    }

    pub fn to_csv(&self) -> Result<String, EvalError> {
        if self.rows.is_empty() {
            return Err(EvalError::EmptyReport);
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let err = |e: csv::Error| EvalError::File { path: "<csv>".into(), message: e.to_string() };
        w.write_record(self.header()).map_err(err)?;
        for row in &self.rows {
            w.write_record(self.record(row)).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| EvalError::File { path: "<csv>".into(), message: e.to_string() })?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

/// Writes `report` to `path` in `format`. Output bytes depend only on the report.
pub fn emit_report(report: &EvalReport, format: ReportFormat, path: &Path) -> Result<(), EvalError> {
    let body = match format {
        ReportFormat::Markdown => report.to_markdown()?,
        ReportFormat::Csv => report.to_csv()?,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| file_err(parent, e))?;
    }
    fs::write(path, body).map_err(|e| file_err(path, e))
}

/// Mean over chunks of the mean Jaccard similarity of adjacent sentences'
/// token sets. Chunks with fewer than two sentences are skipped.
pub fn coherence(chunks: &[Chunk]) -> f64 {
    let per_chunk: Vec<f64> = chunks.iter().filter_map(|c| chunk_coherence(&c.text)).collect();
    if per_chunk.is_empty() {
        0.0
    } else {
        per_chunk.iter().sum::<f64>() / per_chunk.len() as f64
    }
}

pub fn chunk_coherence(text: &str) -> Option<f64> {
    let idx = CharIndex::new(text);
    let sets: Vec<BTreeSet<String>> = sentence_spans(text)
        .into_iter()
        .map(|(s, e)| tokens(idx.slice(s, e)).into_iter().collect::<BTreeSet<_>>())
        .filter(|s| !s.is_empty())
        .collect();
    if sets.len() < 2 {
        return None;
    }
    let pairs = sets.windows(2).map(|w| {
        let inter = w[0].intersection(&w[1]).count() as f64;
        let union = w[0].union(&w[1]).count() as f64;
        inter / union
    });
    Some(pairs.sum::<f64>() / (sets.len() - 1) as f64)
}

/// A retrieved chunk answers `qa` when it comes from the right document,
/// overlaps the answer span and contains the expected text.
pub fn is_hit(chunk: &Chunk, qa: &QAPair) -> bool {
    let (Some(doc), Some(start), Some(end)) = (&qa.doc_id, qa.answer_start, qa.answer_end) else {
        return qa.expected_chunk_ids.contains(&chunk.chunk_id);
    };
    chunk.doc_id == *doc && chunk.char_start < end && start < chunk.char_end && chunk.text.contains(&qa.expected_answer_substring)
}

/// Fraction of in-context questions with a hit in the top `k`.
pub fn hit_at_k(index: &Index, embedder: &dyn Embedder, qa: &[QAPair], k: usize) -> Result<f64, IndexError> {
    let mut total = 0usize;
    let mut hits = 0usize;
    for q in qa.iter().filter(|q| q.in_context) {
        total += 1;
        if index.search_text(embedder, &q.question, k)?.iter().any(|h| is_hit(&h.chunk, q)) {
            hits += 1;
        }
    }
    Ok(if total == 0 { 0.0 } else { hits as f64 / total as f64 })
}

pub fn strategy_label(s: ChunkStrategy) -> &'static str {
    match s {
        ChunkStrategy::FixedWindow => "Fixed Window",
        ChunkStrategy::Paragraph => "Paragraph-Based",
        ChunkStrategy::SemanticUnit => "Semantic Unit Identification",
        ChunkStrategy::Topic => "Topic Modeling",
        ChunkStrategy::Entity => "Entity-Based",
    }
}

pub const TABLE1_COLUMNS: [&str; 4] = ["Chunk Size", "Coherence", "Relevance", "Chunks"];

/// Relevance is hit@k; rows sorted by relevance, highest first.
pub fn eval_chunking(
    corpus: &EvalCorpus,
    strategies: &[ChunkStrategy],
    params: &ChunkParams,
    k: usize,
) -> Result<EvalReport, EvalError> {
    let embedder = HashEmbedder::default();
    let mut scored: Vec<(Option<f64>, String, Vec<(&str, Cell)>)> = Vec::new();
    for &strategy in strategies {
        let chunks = ingest_documents(&corpus.documents, &Chunker::new(strategy, params.clone()));
        let label = strategy_label(strategy).to_string();
        if chunks.is_empty() {
            let invalid = || Cell::Text("invalid".into());
            scored.push((None, label, vec![("Chunk Size", invalid()), ("Coherence", invalid()), ("Relevance", invalid()), ("Chunks", Cell::Int(0))]));
            continue;
        }
        let index = Index::build(&chunks, &embedder)?;
        let relevance = hit_at_k(&index, &embedder, &corpus.qa, k)?;
        let mean_size = chunks.iter().map(|c| c.text.chars().count()).sum::<usize>() as f64 / chunks.len() as f64;
        scored.push((
            Some(relevance),
            label,
            vec![
                ("Chunk Size", Cell::Int(mean_size.round() as u64)),
                ("Coherence", Cell::Rate(coherence(&chunks))),
                ("Relevance", Cell::Rate(relevance)),
                ("Chunks", Cell::Int(chunks.len() as u64)),
            ],
        ));
    }
    // Stable: equal relevance keeps the requested strategy order; invalid rows last.
    scored.sort_by(|a, b| b.0.unwrap_or(f64::NEG_INFINITY).total_cmp(&a.0.unwrap_or(f64::NEG_INFINITY)));
    let mut report = EvalReport::new("Chunking strategies", "Chunking Strategy", &TABLE1_COLUMNS);
    for (_, name, cells) in scored {
        report.push(name, cells);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptVariant {
    Standard,
    ChainOfThought,
    FinalQa,
}

impl PromptVariant {
    pub const ALL: [PromptVariant; 3] = [PromptVariant::Standard, PromptVariant::ChainOfThought, PromptVariant::FinalQa];

    pub fn label(self) -> &'static str {
        match self {
            PromptVariant::Standard => "Standard Prompt",
            PromptVariant::ChainOfThought => "Chain-of-Thought Prompt",
            PromptVariant::FinalQa => "Final QA Prompt",
        }
    }

    pub fn template(self, templates: &PromptTemplates) -> Template {
        match self {
            PromptVariant::Standard => templates.standard.clone(),
            PromptVariant::ChainOfThought => templates.chain_of_thought.clone(),
            PromptVariant::FinalQa => templates.qa.clone(),
        }
    }

    /// Only the serving configuration runs the grounding guard.
    pub fn guarded(self) -> bool {
        self == PromptVariant::FinalQa
    }
}

pub const TABLE2_COLUMNS: [&str; 4] = ["Hallucination", "Calculation Efficacy", "Response Time", "Answer Accuracy"];

#[derive(Debug, Clone, PartialEq)]
pub struct PromptEval {
    pub report: EvalReport,
    /// Mean wall-clock milliseconds per question, by variant label. Kept out
    /// of the table so report bytes stay reproducible.
    pub latency_ms: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptEvalConfig {
    pub k: usize,
    pub grounding_threshold: f64,
    pub mock_mode: MockMode,
    pub params: ChunkParams,
}

impl Default for PromptEvalConfig {
    fn default() -> Self {
        Self {
            k: crate::index::DEFAULT_K,
            grounding_threshold: crate::conversation::DEFAULT_GROUNDING_THRESHOLD,
            mock_mode: MockMode::AlwaysAnswer,
            params: ChunkParams::default(),
        }
    }
}

/// Hallucination = share of off-topic questions answered with anything but
/// the refusal; accuracy = share of in-context answers containing the
/// expected text.
pub fn eval_prompts(corpus: &EvalCorpus, templates: &PromptTemplates, config: &PromptEvalConfig) -> Result<PromptEval, EvalError> {
    let embedder: Arc<dyn Embedder> = Arc::new(HashEmbedder::default());
    let chunks = ingest_documents(&corpus.documents, &Chunker::new(ChunkStrategy::FixedWindow, config.params.clone()));
    let index = Arc::new(Index::build(&chunks, embedder.as_ref())?);
    let llm = Arc::new(MockLlm::new(templates, config.mock_mode));
    let base = ConversationEngine::new(
        index,
        embedder,
        llm,
        templates.clone(),
        EngineConfig { retrieval_k: config.k, ..EngineConfig::default() },
    );
    let now = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).single().expect("valid instant");
    let mut report = EvalReport::new("Prompt variants", "Prompt Strategy", &TABLE2_COLUMNS);
    let mut latency_ms = Vec::new();
    for variant in PromptVariant::ALL {
        let engine = base
            .clone()
            .with_qa_template(variant.template(templates))
            .with_grounding_threshold(variant.guarded().then_some(config.grounding_threshold));
        let started = Instant::now();
        let (mut answered_off, mut off) = (0usize, 0usize);
        let (mut correct, mut on) = (0usize, 0usize);
        for q in &corpus.qa {
            let turn = match engine.answer(&[], &q.question, TurnMeta::text_en(now)) {
                Ok(t) => t,
                Err(EngineError::Llm { turn, .. }) => *turn,
                Err(EngineError::Retrieval(e)) => return Err(e.into()),
                Err(EngineError::EmptyQuestion) => continue,
            };
            if q.in_context {
                on += 1;
                correct += usize::from(!turn.refused && turn.answer_en.contains(&q.expected_answer_substring));
            } else {
                off += 1;
                answered_off += usize::from(!turn.refused);
            }
        }
        let n = (on + off).max(1) as f64;
        latency_ms.push((variant.label().to_string(), started.elapsed().as_secs_f64() * 1000.0 / n));
        let rate = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        report.push(
            variant.label(),
            vec![
                ("Hallucination", Cell::Rate(rate(answered_off, off))),
                ("Calculation Efficacy", Cell::Text("N/A".into())),
                ("Response Time", Cell::Text("-".into())),
                ("Answer Accuracy", Cell::Rate(rate(correct, on))),
            ],
        );
    }
    Ok(PromptEval { report, latency_ms })
}

/// The three provider comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProviderTable {
    Translation,
    Tts,
    Llm,
}

impl ProviderTable {
    pub const ALL: [ProviderTable; 3] = [ProviderTable::Translation, ProviderTable::Tts, ProviderTable::Llm];

    pub fn file_stem(self) -> &'static str {
        match self {
            ProviderTable::Translation => "table3",
            ProviderTable::Tts => "table4",
            ProviderTable::Llm => "table5",
        }
    }

    pub fn capability(self) -> Capability {
        match self {
            ProviderTable::Translation => Capability::Translate,
            ProviderTable::Tts => Capability::Tts,
            ProviderTable::Llm => Capability::Llm,
        }
    }

    pub fn bundled_csv(self) -> &'static str {
        match self {
            ProviderTable::Translation => fixtures::TABLE3,
            ProviderTable::Tts => fixtures::TABLE4,
            ProviderTable::Llm => fixtures::TABLE5,
        }
    }

    fn layout(self) -> (&'static str, &'static str, &'static [&'static str]) {
        match self {
            ProviderTable::Translation => ("Translation providers", "Translation Service", &["Accuracy (%)", "Speed (ms)", "Selected"]),
            ProviderTable::Tts => {
                ("Text-to-speech providers", "TTS Model", &["Response Time (ms)", "Cost ($)", "Accuracy (%)", "Selected"])
            }
            ProviderTable::Llm => ("Language models", "LLM", &["Accuracy (%)", "Processing Time (ms)", "Selected"]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProviderSelection {
    pub table: ProviderTable,
    pub selected: String,
    pub report: EvalReport,
}

pub fn provider_report(table: ProviderTable, profiles: &[ProviderProfile]) -> Result<ProviderSelection, EvalError> {
    let chosen = select_provider(profiles, table.capability(), None)?;
    let (title, name_col, cols) = table.layout();
    let mut report = EvalReport::new(title, name_col, cols);
    for p in profiles.iter().filter(|p| p.capability == table.capability()) {
        let mut cells = vec![
            ("Accuracy (%)", Cell::Num(p.accuracy)),
            ("Selected", Cell::Text(if p.name == chosen.name { "yes" } else { "" }.into())),
        ];
        match table {
            ProviderTable::Translation => cells.push(("Speed (ms)", Cell::Num(p.latency_ms))),
            ProviderTable::Tts => {
                cells.push(("Response Time (ms)", Cell::Num(p.latency_ms)));
                cells.push(("Cost ($)", p.cost.map_or(Cell::Text(String::new()), Cell::Num)));
            }
            ProviderTable::Llm => cells.push(("Processing Time (ms)", Cell::Num(p.latency_ms))),
        }
        report.push(p.name.clone(), cells);
    }
    Ok(ProviderSelection { table, selected: chosen.name, report })
}

/// Reads `table3.csv`..`table5.csv` from `dir`, or the bundled copies when
/// `dir` is `None`.
pub fn eval_provider_selection(dir: Option<&Path>) -> Result<Vec<ProviderSelection>, EvalError> {
    ProviderTable::ALL
        .iter()
        .map(|&t| {
            let profiles = match dir {
                None => parse_profiles(t.bundled_csv().as_bytes())?,
                Some(d) => {
                    let path = d.join(format!("{}.csv", t.file_stem()));
                    let bytes = fs::read(&path).map_err(|e| file_err(&path, e))?;
                    parse_profiles(bytes.as_slice())?
                }
            };
            provider_report(t, &profiles)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Chunking,
    Prompts,
    Providers,
    All,
}

impl FromStr for Suite {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chunking" => Ok(Suite::Chunking),
            "prompts" => Ok(Suite::Prompts),
            "providers" => Ok(Suite::Providers),
            "all" => Ok(Suite::All),
            _ => Err(EvalError::UnknownSuite(s.into())),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub templates: Option<PromptTemplates>,
    pub profiles_dir: Option<PathBuf>,
}

fn emit_both(report: &EvalReport, out: &Path, stem: &str, written: &mut Vec<PathBuf>) -> Result<(), EvalError> {
    for (format, ext) in [(ReportFormat::Markdown, "md"), (ReportFormat::Csv, "csv")] {
        let path = out.join(format!("{stem}.{ext}"));
        emit_report(report, format, &path)?;
        written.push(path);
    }
    Ok(())
}

/// Runs `suite` and writes `tableN.md`/`tableN.csv` (plus `latency.csv` for
/// the prompt suite) into `out`. Returns the paths written.
pub fn run_suite(suite: Suite, corpus_dir: &Path, out: &Path, options: &RunOptions) -> Result<Vec<PathBuf>, EvalError> {
    fs::create_dir_all(out).map_err(|e| file_err(out, e))?;
    let mut written = Vec::new();
    let needs_corpus = matches!(suite, Suite::Chunking | Suite::Prompts | Suite::All);
    let corpus = if needs_corpus { Some(EvalCorpus::load(corpus_dir)?) } else { None };
    if matches!(suite, Suite::Chunking | Suite::All) {
        let corpus = corpus.as_ref().expect("loaded");
        let report = eval_chunking(corpus, &ChunkStrategy::ALL, &ChunkParams::default(), crate::index::DEFAULT_K)?;
        emit_both(&report, out, "table1", &mut written)?;
    }
    if matches!(suite, Suite::Prompts | Suite::All) {
        let corpus = corpus.as_ref().expect("loaded");
        let templates = options.templates.clone().unwrap_or_default();
        let eval = eval_prompts(corpus, &templates, &PromptEvalConfig::default())?;
        emit_both(&eval.report, out, "table2", &mut written)?;
        let mut latency = String::from("variant,mean_ms\n");
        for (name, ms) in &eval.latency_ms {
            latency.push_str(&format!("{name},{ms:.3}\n"));
        }
        let path = out.join("latency.csv");
        fs::write(&path, latency).map_err(|e| file_err(&path, e))?;
        written.push(path);
    }
    if matches!(suite, Suite::Providers | Suite::All) {
        for sel in eval_provider_selection(options.profiles_dir.as_deref())? {
            emit_both(&sel.report, out, sel.table.file_stem(), &mut written)?;
        }
    }
    Ok(written)
}
