use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use polyrag_core::conversation::{Channel, PromptTemplates};
use polyrag_core::corpus::{ingest, load_corpus, ChunkParams, ChunkStrategy, Chunker};
use polyrag_core::eval::{generate, run_suite, write_suite, RunOptions, Suite, SynthConfig, DEFAULT_SEED};
use polyrag_core::lang::LangTag;
use polyrag_service::{AppState, InboundMessage, MessageBody, ServiceConfig};

#[derive(Parser)]
#[command(name = "polyrag", version, about = "Multilingual retrieval-augmented question answering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Chunk a corpus into a JSONL chunk store.
    Ingest {
        #[arg(long)]
        root: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, default_value = "fixed")]
        strategy: ChunkStrategy,
        #[arg(long, default_value_t = 1000)]
        size: usize,
        #[arg(long, default_value_t = 200)]
        overlap: usize,
        /// Cluster count per document for the topic strategy.
        #[arg(long)]
        topics: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the HTTP API and webhook.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Interactive question answering on the terminal.
    Chat {
        #[arg(long, conflicts_with = "corpus")]
        config: Option<PathBuf>,
        /// Corpus directory, used when no config is given.
        #[arg(long, required_unless_present = "config")]
        corpus: Option<PathBuf>,
        /// Journal for the REPL's session when using --corpus.
        #[arg(long, default_value = "polyrag-chat.jsonl")]
        journal: PathBuf,
        /// Language code of your questions; detected when omitted.
        #[arg(long)]
        lang: Option<String>,
    },
    /// Produce evaluation tables.
    Eval {
        #[arg(long, default_value = "all")]
        suite: Suite,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Directory with table3.csv, table4.csv, table5.csv (bundled copies otherwise).
        #[arg(long)]
        profiles: Option<PathBuf>,
        #[arg(long)]
        templates: Option<PathBuf>,
    },
    /// Write the seeded synthetic corpus and question set.
    GenCorpus {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Ingest { root, manifest, strategy, size, overlap, topics, out } => {
            let loaded = load_corpus(&root, manifest.as_deref())?;
            for f in &loaded.failures {
                eprintln!("skipped {}: {}", f.path.display(), f.message);
            }
            let mut chunker = Chunker::new(strategy, ChunkParams::new(size, overlap)?);
            chunker.topic_clusters = topics;
            let summary = ingest(&loaded.documents, &chunker, &out)?;
            println!("{} documents, {} chunks -> {}", summary.documents, summary.chunks, out.display());
        }
        Command::Serve { config } => {
            let cfg = ServiceConfig::load(&config)?;
            let service = Arc::new(cfg.build_service()?);
            let state = AppState { service, verify_token: cfg.webhook_verify_token.clone() };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(polyrag_service::serve(state, cfg.static_dir.clone(), &cfg.listen))?;
        }
        Command::Chat { config, corpus, journal, lang } => {
            let cfg = match (config, corpus) {
                (Some(c), _) => ServiceConfig::load(&c)?,
                (None, Some(root)) => ServiceConfig::for_corpus(root, journal),
                (None, None) => bail!("pass --config or --corpus"),
            };
            repl(&cfg, lang.map(LangTag::new))?;
        }
        Command::Eval { suite, corpus, out, profiles, templates } => {
            let templates = templates.as_deref().map(PromptTemplates::load).transpose()?;
            let written = run_suite(suite, &corpus, &out, &RunOptions { templates, profiles_dir: profiles })?;
            for p in written {
                println!("{}", p.display());
            }
        }
        Command::GenCorpus { seed, out } => {
            let suite = generate(&SynthConfig { seed, ..SynthConfig::default() })?;
            write_suite(&suite, &out)?;
            println!("{} documents, {} questions -> {}", suite.docs.len(), suite.qa.len(), out.display());
        }
    }
    Ok(())
}

fn repl(cfg: &ServiceConfig, lang: Option<LangTag>) -> Result<()> {
    let service = cfg.build_service().context("starting pipeline")?;
    let sender = "cli-local";
    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout();
    let mut n = 0u64;
    println!("Ask a question (empty line or Ctrl-D to quit).");
    loop {
        print!("> ");
        stdout.flush()?;
        let mut line = String::new();
        if stdin.lock().read_line(&mut line)? == 0 || line.trim().is_empty() {
            break;
        }
        n += 1;
        let msg = InboundMessage {
            channel: Channel::Cli,
            sender_id: sender.into(),
            message_id: format!("cli-{}-{n}", service.now().timestamp_nanos_opt().unwrap_or_default()),
            session_id: None,
            body: MessageBody::Text(line.trim().to_string()),
            lang_hint: lang.clone(),
            timestamp: service.now(),
        };
        match service.handle_chat(msg) {
            Ok(out) => {
                println!("[{}] {}", out.lang.code, out.text);
                if !out.sources.is_empty() {
                    println!("  sources: {}", out.sources.join(", "));
                }
            }
            Err(e) => println!("error: {e}"),
        }
    }
    Ok(())
}
