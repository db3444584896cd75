use polyrag_core::corpus::{
    chunk_entity, chunk_fixed, chunk_paragraph, chunk_semantic_unit, chunk_topic, Chunk, ChunkParams,
    ChunkStrategy, Chunker, Collection, Document, EntityLexicon, HeadingPattern,
};
use polyrag_core::text::{tokens, CharIndex};
use proptest::prelude::*;
use std::collections::BTreeMap;

fn spans(chunks: &[Chunk]) -> Vec<(usize, usize)> {
    chunks.iter().map(|c| (c.char_start, c.char_end)).collect()
}

#[test]
fn entity_windows_100_apart_merge() {
    // 150 sentences of 19 chars plus a space; "leave" opens sentences 60 and 65,
    // i.e. offsets 1200 and 1300.
    let mut sentences = vec!["Staff sign in here."; 150];
    sentences[60] = "Leave is paid here.";
    sentences[65] = "Leave is paid here.";
    let text = sentences.join(" ");
    assert_eq!(text.chars().count(), 2999);
    let lexicon = EntityLexicon::new(["leave"]).unwrap();
    let chunks = chunk_entity("d", &text, &lexicon, &ChunkParams::default());
    // occurrence 1200: [700, 1700) widened to sentences 35..=84 -> [700, 1699)
    // occurrence 1300: [800, 1800) widened to sentences 40..=89 -> [800, 1799)
    // merged -> [700, 1799); residue [0, 700) and [1799, 2999) as fixed windows
    assert_eq!(spans(&chunks), vec![(0, 700), (700, 1799), (1799, 2799), (2599, 2999)]);
}

#[test]
fn entity_windows_far_apart_stay_separate() {
    let mut sentences = vec!["Staff sign in here."; 200];
    sentences[10] = "Leave is paid here.";
    sentences[150] = "Leave is paid here.";
    let text = sentences.join(" ");
    let lexicon = EntityLexicon::new(["leave"]).unwrap();
    let params = ChunkParams::new(200, 50).unwrap();
    let chunks = chunk_entity("d", &text, &lexicon, &params);
    let with_leave: Vec<_> = chunks.iter().filter(|c| c.text.contains("Leave")).collect();
    assert_eq!(with_leave.len(), 2);
}

#[test]
fn paragraph_2500_matches_fixed_spans() {
    let text = "p".repeat(2500);
    let d = ChunkParams::default();
    assert_eq!(spans(&chunk_paragraph("d", &text, &d)), vec![(0, 1000), (800, 1800), (1600, 2500)]);
    assert_eq!(spans(&chunk_paragraph("d", &text, &d)), spans(&chunk_fixed("d", &text, &d)));
}

#[test]
fn semantic_2500_section_is_windowed_inside_section() {
    // preamble "intro" [0,5), newline, section "# S\n" + 2496 chars -> [6, 2506)
    let text = format!("intro\n# S\n{}", "s".repeat(2496));
    let chunks = chunk_semantic_unit("d", &text, &HeadingPattern::defaults(), &ChunkParams::default());
    let expected: Vec<_> = [(0, 1000), (800, 1800), (1600, 2500)].iter().map(|&(s, e)| (s + 6, e + 6)).collect();
    assert_eq!(chunks[0].text, "intro");
    assert_eq!(spans(&chunks[1..]), expected);
}

fn tf(text: &str) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    for t in tokens(text) {
        *m.entry(t).or_insert(0.0) += 1.0;
    }
    m
}

fn brute_cosine(a: &str, b: &str) -> f64 {
    let (a, b) = (tf(a), tf(b));
    let keys: std::collections::BTreeSet<_> = a.keys().chain(b.keys()).collect();
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for k in keys {
        let x = a.get(k.as_str()).copied().unwrap_or(0.0);
        let y = b.get(k.as_str()).copied().unwrap_or(0.0);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    dot / (na.sqrt() * nb.sqrt())
}

#[test]
fn topic_groups_leave_and_audit_paragraphs() {
    let paras = [
        "The leave policy grants annual leave to every employee.",
        "Internal audit findings are reviewed by the quality team.",
        "Employees request leave through the leave policy portal.",
        "Each audit closes with corrective actions and audit records.",
    ];
    // oracle: every paragraph's nearest neighbour is its same-topic partner
    for (i, a) in paras.iter().enumerate() {
        let nearest = (0..paras.len())
            .filter(|&j| j != i)
            .max_by(|&x, &y| brute_cosine(a, paras[x]).total_cmp(&brute_cosine(a, paras[y])))
            .unwrap();
        assert_eq!(nearest % 2, i % 2, "paragraph {i} nearest {nearest}");
    }
    let text = paras.join("\n\n");
    let chunks = chunk_topic("d", &text, 2, &ChunkParams::default()).unwrap();
    assert_eq!(chunks.len(), 2);
    assert_eq!(chunks[0].text, format!("{}\n\n{}", paras[0], paras[2]));
    assert_eq!(chunks[1].text, format!("{}\n\n{}", paras[1], paras[3]));
    // covering span of first and last member paragraph
    let idx = CharIndex::new(&text);
    assert!(idx.slice(chunks[0].char_start, chunks[0].char_end).starts_with(paras[0]));
    assert!(idx.slice(chunks[0].char_start, chunks[0].char_end).ends_with(paras[2]));
}

#[test]
fn topic_respects_cluster_cap() {
    let text = (0..8).map(|i| format!("word{i} other{i}")).collect::<Vec<_>>().join("\n\n");
    for k in 1..=8 {
        let chunks = chunk_topic("d", &text, k, &ChunkParams::default()).unwrap();
        assert_eq!(chunks.len(), k);
    }
}

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        4 => "[a-z]{1,9}",
        1 => Just("leave".to_string()),
        1 => Just("audit".to_string()),
        1 => Just("چھٹی".to_string()),
        1 => Just("ਛੁੱਟੀ".to_string()),
    ]
}

fn sentence() -> impl Strategy<Value = String> {
    (prop::collection::vec(word(), 1..12), prop_oneof![Just("."), Just("?"), Just("!"), Just("؟"), Just("")])
        .prop_map(|(w, end)| format!("{}{}", w.join(" "), end))
}

fn paragraph() -> impl Strategy<Value = String> {
    (
        prop_oneof![3 => Just(String::new()), 1 => Just("# ".to_string()), 1 => Just("Step ".to_string()), 1 => Just("1. ".to_string())],
        prop::collection::vec(sentence(), 1..8),
    )
        .prop_map(|(head, s)| format!("{head}{}", s.join(" ")))
}

fn document() -> impl Strategy<Value = String> {
    prop::collection::vec((paragraph(), prop_oneof![Just("\n\n"), Just("\n"), Just("\n \n\n"), Just(" ")]), 0..14)
        .prop_map(|parts| parts.into_iter().map(|(p, sep)| format!("{p}{sep}")).collect())
}

fn params() -> impl Strategy<Value = ChunkParams> {
    (1usize..300).prop_flat_map(|size| (Just(size), 0..size)).prop_map(|(s, o)| ChunkParams::new(s, o).unwrap())
}

fn covered(chunks: &[Chunk], len: usize) -> Vec<bool> {
    let mut mask = vec![false; len];
    for c in chunks {
        for m in &mut mask[c.char_start..c.char_end] {
            *m = true;
        }
    }
    mask
}

fn check_common(text: &str, chunks: &[Chunk], strategy: ChunkStrategy) -> Result<(), TestCaseError> {
    let idx = CharIndex::new(text);
    for (i, c) in chunks.iter().enumerate() {
        prop_assert!(c.char_start < c.char_end && c.char_end <= idx.len());
        prop_assert_eq!(&c.chunk_id, &Chunk::chunk_id_for("d", i));
        prop_assert_eq!(c.strategy, strategy);
        if strategy.is_span_preserving() {
            prop_assert_eq!(c.text.as_str(), idx.slice(c.char_start, c.char_end));
        }
    }
    Ok(())
}

fn check_non_ws_coverage(text: &str, chunks: &[Chunk]) -> Result<(), TestCaseError> {
    let mask = covered(chunks, text.chars().count());
    for (i, ch) in text.chars().enumerate() {
        prop_assert!(mask[i] || ch.is_whitespace(), "char {} ({:?}) uncovered", i, ch);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn fixed_window_invariants(text in document(), p in params()) {
        let chunks = chunk_fixed("d", &text, &p);
        check_common(&text, &chunks, ChunkStrategy::FixedWindow)?;
        let mask = covered(&chunks, text.chars().count());
        prop_assert!(mask.iter().all(|&m| m));
        for c in &chunks {
            prop_assert!(c.text.chars().count() <= p.size());
        }
        for w in chunks.windows(2) {
            prop_assert_eq!(w[0].char_end - w[1].char_start, p.overlap());
        }
        prop_assert_eq!(chunks, chunk_fixed("d", &text, &p));
    }

    #[test]
    fn paragraph_invariants(text in document(), p in params()) {
        let chunks = chunk_paragraph("d", &text, &p);
        check_common(&text, &chunks, ChunkStrategy::Paragraph)?;
        check_non_ws_coverage(&text, &chunks)?;
        for c in &chunks {
            prop_assert!(c.text.chars().count() <= p.size());
        }
        prop_assert_eq!(chunks, chunk_paragraph("d", &text, &p));
    }

    #[test]
    fn semantic_invariants(text in document(), p in params()) {
        let headings = HeadingPattern::defaults();
        let chunks = chunk_semantic_unit("d", &text, &headings, &p);
        check_common(&text, &chunks, ChunkStrategy::SemanticUnit)?;
        check_non_ws_coverage(&text, &chunks)?;
        for c in &chunks {
            prop_assert!(c.text.chars().count() <= p.size());
        }
        prop_assert_eq!(chunks, chunk_semantic_unit("d", &text, &headings, &p));
    }

    #[test]
    fn entity_invariants(text in document(), p in params()) {
        let lexicon = EntityLexicon::new(["leave", "audit", "چھٹی"]).unwrap();
        let chunks = chunk_entity("d", &text, &lexicon, &p);
        check_common(&text, &chunks, ChunkStrategy::Entity)?;
        check_non_ws_coverage(&text, &chunks)?;
        prop_assert_eq!(chunks, chunk_entity("d", &text, &lexicon, &p));
    }

    #[test]
    fn topic_invariants(text in document(), k in 1usize..6) {
        let p = ChunkParams::default();
        let chunks = chunk_topic("d", &text, k, &p).unwrap();
        check_common(&text, &chunks, ChunkStrategy::Topic)?;
        prop_assert!(chunks.len() <= k);
        // every paragraph lands in exactly one cluster
        let paragraphs = polyrag_core::text::paragraph_spans(&text).len();
        let members: usize = chunks.iter().map(|c| c.text.split("\n\n").count()).sum();
        prop_assert_eq!(members, paragraphs);
        prop_assert_eq!(chunks, chunk_topic("d", &text, k, &p).unwrap());
    }

    #[test]
    fn chunker_dispatch_is_deterministic(text in document()) {
        let doc = Document::new("d", Collection::Hr, &format!("x{text}"), "d.md");
        for strategy in ChunkStrategy::ALL {
            let chunker = Chunker::new(strategy, ChunkParams::new(120, 30).unwrap());
            prop_assert_eq!(chunker.chunk(&doc), chunker.chunk(&doc));
        }
    }
}
