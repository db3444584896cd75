//! Seeded generator for a small HR/QA-style corpus with labelled questions.
//!
//! Every document describes one production unit. Each section holds one
//! templated fact among filler sentences; in-context questions ask for a
//! fact, off-topic questions share no vocabulary with the corpus.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::QAPair;
use crate::corpus::{ChunkParams, ChunkStrategy, Chunker, Collection, Document};
use crate::index::{HashEmbedder, Index};
use crate::text::{char_len, tokens};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub documents: usize,
    pub sections_per_doc: usize,
    pub in_context: usize,
    pub off_topic: usize,
    /// Off-topic questions must score below this against every chunk.
    pub max_off_topic_score: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            documents: 20,
            sections_per_doc: 5,
            in_context: 50,
            off_topic: 50,
            max_off_topic_score: crate::conversation::DEFAULT_GROUNDING_THRESHOLD,
        }
    }
}

/// A generated document plus the file name it is written under.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDoc {
    pub file_name: String,
    pub document: Document,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSuite {
    pub docs: Vec<SynthDoc>,
    pub qa: Vec<QAPair>,
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("could only find {found} of {wanted} off-topic questions below the score limit")]
    OffTopicExhausted { found: usize, wanted: usize },
}

struct FactTemplate {
    heading: &'static str,
    fact: &'static str,
    question: &'static str,
    answer: &'static str,
    /// Inclusive range for `{n}`.
    range: (u32, u32),
}

const HR_FACTS: &[FactTemplate] = &[
    FactTemplate {
        heading: "Annual Leave",
        fact: "Permanent employees of the {unit} unit receive {n} days of annual leave each year.",
        question: "How many days of annual leave do permanent employees of the {unit} unit receive?",
        answer: "{n} days of annual leave",
        range: (14, 30),
    },
    FactTemplate {
        heading: "Sick Leave",
        fact: "Sick leave at the {unit} unit is capped at {n} paid days per year.",
        question: "What is the cap on paid sick leave days at the {unit} unit?",
        answer: "{n} paid days",
        range: (5, 16),
    },
    FactTemplate {
        heading: "Overtime",
        fact: "Overtime hours at the {unit} unit are paid at {n} percent of the basic hourly wage.",
        question: "At what percent of the basic hourly wage are overtime hours paid at the {unit} unit?",
        answer: "{n} percent",
        range: (125, 200),
    },
    FactTemplate {
        heading: "Shift Timings",
        fact: "The morning shift at the {unit} unit starts at {n} minutes past six.",
        question: "At how many minutes past six does the morning shift start at the {unit} unit?",
        answer: "{n} minutes past six",
        range: (5, 55),
    },
    FactTemplate {
        heading: "Notice Period",
        fact: "Staff resigning from the {unit} unit must serve a notice period of {n} weeks.",
        question: "How many weeks of notice must staff resigning from the {unit} unit serve?",
        answer: "{n} weeks",
        range: (2, 12),
    },
    FactTemplate {
        heading: "Medical Allowance",
        fact: "The monthly medical allowance for workers at the {unit} unit is {n} rupees.",
        question: "What is the monthly medical allowance for workers at the {unit} unit?",
        answer: "{n} rupees",
        range: (1500, 6000),
    },
];

const QA_FACTS: &[FactTemplate] = &[
    FactTemplate {
        heading: "Final Audit Sampling",
        fact: "Final audits at the {unit} unit inspect {n} garments from every shipment lot.",
        question: "How many garments from every shipment lot do final audits inspect at the {unit} unit?",
        answer: "{n} garments",
        range: (32, 315),
    },
    FactTemplate {
        heading: "Defect Threshold",
        fact: "A lot at the {unit} unit fails inspection when inspectors find more than {n} major defects.",
        question: "How many major defects must inspectors find before a lot fails inspection at the {unit} unit?",
        answer: "more than {n} major defects",
        range: (2, 21),
    },
    FactTemplate {
        heading: "Safety Training",
        fact: "New hires at the {unit} unit complete {n} hours of machine safety training.",
        question: "How many hours of machine safety training do new hires complete at the {unit} unit?",
        answer: "{n} hours",
        range: (4, 40),
    },
    FactTemplate {
        heading: "Calibration",
        fact: "Measuring tapes at the {unit} unit are calibrated every {n} days by the metrology cell.",
        question: "Every how many days are measuring tapes calibrated at the {unit} unit?",
        answer: "every {n} days",
        range: (7, 90),
    },
    FactTemplate {
        heading: "Shade Approval",
        fact: "Fabric shade bands at the {unit} unit are approved within {n} hours of dyeing.",
        question: "Within how many hours of dyeing are fabric shade bands approved at the {unit} unit?",
        answer: "within {n} hours",
        range: (6, 72),
    },
];

const FILLER: &[&str] = &[
    "This section is reviewed by the compliance office twice a year.",
    "Supervisors keep signed copies of these rules on the floor.",
    "Any exception requires written approval from the plant manager.",
    "Records are stored in the central filing room for later review.",
    "Workers may ask their line leader to explain these terms.",
    "Updates are announced on the notice board near the canteen.",
    "The rules apply equally to every team on site.",
    "Disputes are settled through the grievance committee.",
    "Copies in Urdu are available from the welfare officer.",
    "Breaches are noted in the personnel file.",
    "These terms follow the group policy manual.",
    "Team briefings cover this topic each quarter.",
];

const UNITS: &[&str] = &[
    "Falcon", "Harbor", "Cedar", "Indus", "Saffron", "Quartz", "Lotus", "Meridian", "Orchid", "Sapphire", "Tundra",
    "Willow", "Zephyr", "Beacon", "Crescent", "Dune", "Ember", "Granite", "Jasmine", "Kestrel", "Nimbus", "Opal",
    "Pinnacle", "Raven", "Summit", "Topaz", "Vertex", "Aurora",
];

const OFF_TOPIC_NOUNS: &[&str] = &[
    "penguins", "comets", "glaciers", "violins", "octopuses", "volcanoes", "meteors", "dolphins", "tornadoes",
    "pyramids", "galaxies", "rainbows", "jellyfish", "kangaroos", "saxophones", "telescopes", "asteroids", "giraffes",
    "tsunamis", "flamingos", "nebulae", "hedgehogs", "cathedrals", "submarines",
];

const OFF_TOPIC_VERBS: &[&str] =
    &["glow", "migrate", "erupt", "hibernate", "sparkle", "vibrate", "spin", "echo", "freeze", "drift", "hum", "shimmer"];

const OFF_TOPIC_FORMS: &[&str] = &[
    "Why do {n} {v}?",
    "Can {n} {v} underwater?",
    "Which {n} {v} fastest?",
    "Do {n} {v} during eclipses?",
    "Where do {n} {v} after sunset?",
    "Why would {n} {v} sideways?",
];

fn fill(template: &str, unit: &str, n: u32) -> String {
    template.replace("{unit}", unit).replace("{n}", &n.to_string())
}

struct PlacedFact {
    doc: usize,
    question: String,
    answer: String,
    answer_start: usize,
}

/// Generates the suite. Output depends only on `config`.
pub fn generate(config: &SynthConfig) -> Result<SyntheticSuite, SynthError> {
    if config.documents == 0 || config.documents > UNITS.len() {
        return Err(SynthError::Config(format!("documents must be in 1..={}", UNITS.len())));
    }
    if config.sections_per_doc == 0 || config.sections_per_doc > HR_FACTS.len().min(QA_FACTS.len()) {
        return Err(SynthError::Config("sections_per_doc out of range".into()));
    }
    let total_facts = config.documents * config.sections_per_doc;
    if config.in_context > total_facts {
        return Err(SynthError::Config(format!("only {total_facts} facts available for {} questions", config.in_context)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut units: Vec<&str> = UNITS.to_vec();
    units.shuffle(&mut rng);
    let hr_docs = config.documents.div_ceil(2) + config.documents / 6;

    let mut docs = Vec::with_capacity(config.documents);
    let mut facts = Vec::with_capacity(total_facts);
    for (d, unit) in units.iter().take(config.documents).enumerate() {
        let (collection, pool, kind) =
            if d < hr_docs { (Collection::Hr, HR_FACTS, "Human Resources Handbook") } else { (Collection::Qa, QA_FACTS, "Quality Manual") };
        let mut text = format!("# {unit} Unit {kind}\n");
        let mut templates: Vec<&FactTemplate> = pool.iter().collect();
        templates.shuffle(&mut rng);
        for t in templates.into_iter().take(config.sections_per_doc) {
            let n = rng.gen_range(t.range.0..=t.range.1);
            let mut sentences: Vec<String> = FILLER.choose_multiple(&mut rng, 3).map(|s| s.to_string()).collect();
            let fact = fill(t.fact, unit, n);
            let at = rng.gen_range(0..=sentences.len());
            sentences.insert(at, fact.clone());
            text.push_str(&format!("\n## {}\n\n", t.heading));
            let fact_start = char_len(&text) + sentences[..at].iter().map(|s| char_len(s) + 1).sum::<usize>();
            text.push_str(&sentences.join(" "));
            text.push('\n');
            let answer = fill(t.answer, unit, n);
            let offset = fact.find(&answer).map(|b| char_len(&fact[..b])).expect("answer appears in fact");
            facts.push(PlacedFact { doc: d, question: fill(t.question, unit, n), answer, answer_start: fact_start + offset });
        }
        let prefix = if collection == Collection::Hr { "hr" } else { "qa" };
        let stem = format!("{prefix}-{:02}-{}", d + 1, unit.to_lowercase());
        docs.push(SynthDoc { file_name: format!("{stem}.md"), document: Document::new(stem.clone(), collection, &text, format!("{stem}.md")) });
    }

    let documents: Vec<Document> = docs.iter().map(|d| d.document.clone()).collect();
    let default_chunks = crate::corpus::ingest_documents(&documents, &Chunker::new(ChunkStrategy::FixedWindow, ChunkParams::default()));

    let mut chosen: Vec<usize> = (0..facts.len()).collect();
    chosen.shuffle(&mut rng);
    chosen.truncate(config.in_context);
    chosen.sort_unstable();
    let mut qa = Vec::with_capacity(config.in_context + config.off_topic);
    for i in chosen {
        let f = &facts[i];
        let doc_id = docs[f.doc].document.doc_id.clone();
        let end = f.answer_start + char_len(&f.answer);
        let expected_chunk_ids = default_chunks
            .iter()
            .filter(|c| c.doc_id == doc_id && c.char_start <= f.answer_start && end <= c.char_end)
            .map(|c| c.chunk_id.clone())
            .collect();
        qa.push(QAPair {
            question: f.question.clone(),
            expected_chunk_ids,
            expected_answer_substring: f.answer.clone(),
            in_context: true,
            doc_id: Some(doc_id),
            answer_start: Some(f.answer_start),
            answer_end: Some(end),
        });
    }

    qa.extend(off_topic_questions(config, &documents, &mut rng)?);
    Ok(SyntheticSuite { docs, qa })
}

fn off_topic_questions(config: &SynthConfig, documents: &[Document], rng: &mut ChaCha8Rng) -> Result<Vec<QAPair>, SynthError> {
    let vocabulary: BTreeSet<String> = documents.iter().flat_map(|d| tokens(&d.text)).collect();
    let embedder = HashEmbedder::default();
    // Check against every strategy's chunks so the guard holds whichever store is served.
    let indexes: Vec<Index> = ChunkStrategy::ALL
        .iter()
        .map(|s| {
            let chunks = crate::corpus::ingest_documents(documents, &Chunker::new(*s, ChunkParams::default()));
            Index::build(&chunks, &embedder).expect("generated corpus chunks")
        })
        .collect();

    let mut candidates = Vec::new();
    for form in OFF_TOPIC_FORMS {
        for n in OFF_TOPIC_NOUNS {
            for v in OFF_TOPIC_VERBS {
                candidates.push(form.replace("{n}", n).replace("{v}", v));
            }
        }
    }
    candidates.shuffle(rng);
    let mut out = Vec::with_capacity(config.off_topic);
    for q in candidates {
        if out.len() == config.off_topic {
            break;
        }
        if tokens(&q).iter().any(|t| vocabulary.contains(t)) {
            continue;
        }
        let below = indexes.iter().all(|index| {
            index
                .search_text(&embedder, &q, 1)
                .expect("search")
                .first()
                .is_none_or(|h| h.score < config.max_off_topic_score)
        });
        if below {
            out.push(QAPair {
                question: q,
                expected_chunk_ids: Vec::new(),
                expected_answer_substring: String::new(),
                in_context: false,
                doc_id: None,
                answer_start: None,
                answer_end: None,
            });
        }
    }
    if out.len() < config.off_topic {
        return Err(SynthError::OffTopicExhausted { found: out.len(), wanted: config.off_topic });
    }
    Ok(out)
}
