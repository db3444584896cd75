//! Service configuration (TOML) and assembly of the pipeline from it.
//!
//! ```toml
//! listen = "127.0.0.1:8080"
//! journal = "var/journal.jsonl"
//! session_ttl_secs = 86400
//! retrieval_k = 4
//! grounding_threshold = 0.15
//! history_window = 5
//! webhook_verify_token = "change-me"
//! templates = "templates.toml"      # optional, bundled templates otherwise
//! dictionary = "dictionary.tsv"     # optional, bundled dictionary otherwise
//! static_dir = "ui/dist"            # optional
//! media_dir = "var/media"           # optional
//!
//! [corpus]
//! store = "var/chunks.jsonl"        # output of `polyrag ingest`, or:
//! root = "corpus"
//! manifest = "corpus/manifest.csv"
//! strategy = "fixed"
//! size = 1000
//! overlap = 200
//!
//! [providers]
//! adapter = "mock"
//! translator = "dictionary"        # or "transliteration"
//! profiles_dir = "profiles"         # table3.csv, table4.csv, table5.csv
//! max_in_flight = 4
//! ```
//!
//! Relative paths are resolved against the config file's directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use polyrag_core::conversation::{ConversationEngine, EngineConfig, MockLlm, PromptTemplates, DEFAULT_GROUNDING_THRESHOLD, DEFAULT_HISTORY_WINDOW};
use polyrag_core::corpus::{ingest_documents, load_corpus, load_store, ChunkParams, ChunkStrategy, Chunker};
use polyrag_core::eval::eval_provider_selection;
use polyrag_core::index::{Embedder, HashEmbedder, Index, DEFAULT_K};
use polyrag_core::lang::{DictionaryTranslator, LanguageRouter, TransliterationTranslator, Translator};
use polyrag_core::provider::DEFAULT_MAX_IN_FLIGHT;
use polyrag_core::speech::{MockStt, MockTts, SpeechGateway};

use crate::media::{DirMedia, MediaStore, MemoryMedia};
use crate::pipeline::ChatService;
use crate::sessions::{SessionStore, DEFAULT_SESSION_TTL_SECS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Adapter {
    #[default]
    Mock,
    Real,
}

/// Which offline translator backs the language router.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MockTranslator {
    /// Phrase table; text outside it fails to translate.
    #[default]
    Dictionary,
    Transliteration,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub store: Option<PathBuf>,
    pub root: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub strategy: Option<String>,
    pub size: Option<usize>,
    pub overlap: Option<usize>,
    /// Persisted vectors for `store`; rebuilt when absent.
    pub index: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProvidersConfig {
    #[serde(default)]
    pub adapter: Adapter,
    #[serde(default)]
    pub translator: MockTranslator,
    pub profiles_dir: Option<PathBuf>,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

impl Default for ProvidersConfig {
    fn default() -> Self {
        Self { adapter: Adapter::Mock, translator: MockTranslator::Dictionary, profiles_dir: None, max_in_flight: DEFAULT_MAX_IN_FLIGHT }
    }
}

fn default_in_flight() -> usize {
    DEFAULT_MAX_IN_FLIGHT
}
fn default_listen() -> String {
    "127.0.0.1:8080".into()
}
fn default_journal() -> PathBuf {
    "journal.jsonl".into()
}
fn default_ttl() -> i64 {
    DEFAULT_SESSION_TTL_SECS
}
fn default_k() -> usize {
    DEFAULT_K
}
fn default_theta() -> Option<f64> {
    Some(DEFAULT_GROUNDING_THRESHOLD)
}
fn default_window() -> usize {
    DEFAULT_HISTORY_WINDOW
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_listen")]
    pub listen: String,
    #[serde(default = "default_journal")]
    pub journal: PathBuf,
    #[serde(default = "default_ttl")]
    pub session_ttl_secs: i64,
    #[serde(default = "default_k")]
    pub retrieval_k: usize,
    #[serde(default = "default_theta")]
    pub grounding_threshold: Option<f64>,
    #[serde(default = "default_window")]
    pub history_window: usize,
    pub webhook_verify_token: Option<String>,
    pub templates: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
    pub media_dir: Option<PathBuf>,
    #[serde(default)]
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub providers: ProvidersConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("config: {0}")]
    Invalid(String),
    #[error("startup failed: {0}")]
    Build(String),
}

fn build_err(e: impl std::fmt::Display) -> ConfigError {
    ConfigError::Build(e.to_string())
}

impl ServiceConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let c: Self = toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Reads the file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read { path: path.to_path_buf(), message: e.to_string() })?;
        let mut c = Self::parse(&text)?;
        c.rebase(path.parent().unwrap_or(Path::new("")));
        Ok(c)
    }

    /// Defaults with mock providers over a corpus directory.
    pub fn for_corpus(root: impl Into<PathBuf>, journal: impl Into<PathBuf>) -> Self {
        let mut c: Self = toml::from_str("").expect("every field has a default");
        c.corpus.root = Some(root.into());
        c.journal = journal.into();
        c
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.retrieval_k == 0 {
            return Err(ConfigError::Invalid("retrieval_k must be at least 1".into()));
        }
        if self.session_ttl_secs <= 0 {
            return Err(ConfigError::Invalid("session_ttl_secs must be positive".into()));
        }
        if self.providers.max_in_flight == 0 {
            return Err(ConfigError::Invalid("providers.max_in_flight must be at least 1".into()));
        }
        if self.corpus.store.is_none() && self.corpus.root.is_none() {
            return Err(ConfigError::Invalid("[corpus] needs `store` or `root`".into()));
        }
        if self.providers.adapter == Adapter::Real {
            return Err(ConfigError::Invalid(
                "providers.adapter = \"real\": no vendor adapters are compiled into this build; use \"mock\" or embed the library with your own provider implementations".into(),
            ));
        }
        Ok(())
    }

    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.journal);
        for p in [
            &mut self.templates,
            &mut self.dictionary,
            &mut self.static_dir,
            &mut self.media_dir,
            &mut self.corpus.store,
            &mut self.corpus.root,
            &mut self.corpus.manifest,
            &mut self.corpus.index,
            &mut self.providers.profiles_dir,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            retrieval_k: self.retrieval_k,
            grounding_threshold: self.grounding_threshold,
            history_window: self.history_window,
            llm_max_in_flight: self.providers.max_in_flight,
        }
    }

    fn build_index(&self, embedder: &dyn Embedder) -> Result<Index, ConfigError> {
        let c = &self.corpus;
        let chunks = if let Some(store) = &c.store {
            load_store(store).map_err(build_err)?
        } else {
            let root = c.root.as_deref().expect("validated");
            let loaded = load_corpus(root, c.manifest.as_deref()).map_err(build_err)?;
            for f in &loaded.failures {
                tracing::warn!(path = %f.path.display(), "skipped corpus file: {}", f.message);
            }
            let strategy: ChunkStrategy = c.strategy.as_deref().unwrap_or("fixed").parse().map_err(build_err)?;
            let defaults = ChunkParams::default();
            let params = ChunkParams::new(c.size.unwrap_or(defaults.size()), c.overlap.unwrap_or(defaults.overlap())).map_err(build_err)?;
            ingest_documents(&loaded.documents, &Chunker::new(strategy, params))
        };
        match (&c.index, c.store.is_some()) {
            (Some(path), true) if path.exists() => Index::load(path, &chunks).map_err(build_err),
            _ if chunks.is_empty() => Ok(Index::empty(embedder.dimension(), embedder.name())),
            _ => Index::build(&chunks, embedder).map_err(build_err),
        }
    }

    /// Assembles the whole pipeline with mock providers.
    pub fn build_service(&self) -> Result<ChatService, ConfigError> {
        if let Some(dir) = &self.providers.profiles_dir {
            for sel in eval_provider_selection(Some(dir)).map_err(build_err)? {
                tracing::info!(table = sel.table.file_stem(), selected = %sel.selected, "provider profile selection");
            }
        }
        let templates = match &self.templates {
            Some(p) => PromptTemplates::load(p).map_err(build_err)?,
            None => PromptTemplates::builtin(),
        };
        let translator: Arc<dyn Translator> = match (self.providers.translator, &self.dictionary) {
            (MockTranslator::Transliteration, _) => Arc::new(TransliterationTranslator),
            (MockTranslator::Dictionary, Some(p)) => Arc::new(DictionaryTranslator::load(p).map_err(build_err)?),
            (MockTranslator::Dictionary, None) => Arc::new(DictionaryTranslator::builtin()),
        };
        let embedder: Arc<dyn Embedder> = Arc::new(HashEmbedder::default());
        let index = self.build_index(embedder.as_ref())?;
        tracing::info!(chunks = index.len(), "index ready");
        let llm = Arc::new(MockLlm::grounded(&templates));
        let engine = ConversationEngine::new(Arc::new(index), embedder, llm, templates, self.engine_config());
        let router = LanguageRouter::new(translator);
        let n = self.providers.max_in_flight;
        let speech = SpeechGateway::with_limits(Arc::new(MockStt::new(router.clone())), Arc::new(MockTts::new()), n, n);
        let media: Arc<dyn MediaStore> = match &self.media_dir {
            Some(d) => Arc::new(DirMedia::new(d)),
            None => Arc::new(MemoryMedia::new()),
        };
        let (store, report) =
            SessionStore::open(&self.journal, chrono::Duration::seconds(self.session_ttl_secs)).map_err(build_err)?;
        if report.truncated_bytes > 0 {
            tracing::warn!(bytes = report.truncated_bytes, "dropped torn final journal line");
        }
        tracing::info!(records = report.records.len(), "journal replayed");
        Ok(ChatService::new(engine, router, speech, media, store))
    }
}
