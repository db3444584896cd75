#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicI64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use chrono::{DateTime, Duration, TimeZone, Utc};
use polyrag_core::conversation::{Channel, ConversationEngine, EngineConfig, LlmProvider, MockLlm, PromptTemplates};
use polyrag_core::corpus::{ingest_documents, load_corpus, ChunkParams, ChunkStrategy, Chunker};
use polyrag_core::index::{Embedder, HashEmbedder, Index};
use polyrag_core::lang::{LanguageRouter, Translator};
use polyrag_core::provider::ProviderError;
use polyrag_core::speech::SpeechGateway;
use polyrag_service::media::MemoryMedia;
use polyrag_service::{ChatService, InboundMessage, MessageBody, SessionStore};

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/corpus")
}

pub fn shipped_index() -> Arc<Index> {
    static INDEX: OnceLock<Arc<Index>> = OnceLock::new();
    INDEX
        .get_or_init(|| {
            let docs = load_corpus(&corpus_dir(), Some(&corpus_dir().join("manifest.csv"))).unwrap().documents;
            let chunks = ingest_documents(&docs, &Chunker::new(ChunkStrategy::FixedWindow, ChunkParams::default()));
            Arc::new(Index::build(&chunks, &HashEmbedder::default()).unwrap())
        })
        .clone()
}

pub fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 3, 1, 9, 0, 0).unwrap()
}

/// A clock tests can move forward.
#[derive(Clone, Default)]
pub struct TestClock(Arc<AtomicI64>);

impl TestClock {
    pub fn advance(&self, d: Duration) {
        self.0.fetch_add(d.num_seconds(), Ordering::SeqCst);
    }
    pub fn now(&self) -> DateTime<Utc> {
        t0() + Duration::seconds(self.0.load(Ordering::SeqCst))
    }
}

/// Mock LLM that records prompts and can be switched off.
pub struct ProbeLlm {
    inner: MockLlm,
    pub prompts: Mutex<Vec<String>>,
    pub down: AtomicBool,
}

impl LlmProvider for ProbeLlm {
    fn name(&self) -> &str {
        "probe"
    }
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        self.prompts.lock().unwrap().push(prompt.to_string());
        if self.down.load(Ordering::SeqCst) {
            return Err(ProviderError::new("probe", "outage"));
        }
        self.inner.complete(prompt)
    }
}

pub struct Stack {
    pub service: ChatService,
    pub media: Arc<MemoryMedia>,
    pub llm: Arc<ProbeLlm>,
    pub clock: TestClock,
}

pub fn stack(journal: &Path, translator: Arc<dyn Translator>) -> Stack {
    stack_with_clock(journal, translator, TestClock::default())
}

pub fn stack_with_clock(journal: &Path, translator: Arc<dyn Translator>, clock: TestClock) -> Stack {
    let templates = PromptTemplates::builtin();
    let llm = Arc::new(ProbeLlm { inner: MockLlm::grounded(&templates), prompts: Mutex::new(Vec::new()), down: AtomicBool::new(false) });
    let embedder: Arc<dyn Embedder> = Arc::new(HashEmbedder::default());
    let engine = ConversationEngine::new(shipped_index(), embedder, llm.clone(), templates, EngineConfig::default());
    let router = LanguageRouter::new(translator);
    let speech = SpeechGateway::mock(router.clone());
    let media = Arc::new(MemoryMedia::new());
    let (store, _) = SessionStore::open(journal, Duration::hours(24)).unwrap();
    let c = clock.clone();
    let service = ChatService::new(engine, router, speech, media.clone(), store).with_clock(Arc::new(move || c.now()));
    Stack { service, media, llm, clock }
}

pub fn text_msg(channel: Channel, sender: &str, id: &str, text: &str) -> InboundMessage {
    InboundMessage {
        channel,
        sender_id: sender.into(),
        message_id: id.into(),
        session_id: None,
        body: MessageBody::Text(text.into()),
        lang_hint: None,
        timestamp: t0(),
    }
}

pub fn english_is(text: &str) -> bool {
    polyrag_core::lang::detect_language(text).code == "en"
}
