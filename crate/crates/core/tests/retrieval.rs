use polyrag_core::corpus::{Chunk, ChunkStrategy};
use polyrag_core::index::{Embedder, HashEmbedder, Index};
use proptest::prelude::*;

fn chunk(i: usize, text: String) -> Chunk {
    Chunk {
        doc_id: format!("doc{}", i / 7),
        chunk_id: format!("c{i:04}"),
        char_end: text.chars().count(),
        text,
        char_start: 0,
        strategy: ChunkStrategy::FixedWindow,
    }
}

/// Independent reference: raw bucket counts from a separately written
/// FNV-1a, cosine by the full formula, full sort.
fn oracle_vector(text: &str) -> Vec<f64> {
    let mut v = vec![0.0; 256];
    for tok in text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
        let mut h: u64 = 14695981039346656037;
        for b in tok.to_lowercase().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(1099511628211);
        }
        v[(h % 256) as usize] += 1.0;
    }
    v
}

fn oracle_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn oracle_search(chunks: &[Chunk], query: &str, k: usize) -> Vec<(String, f64)> {
    let q = oracle_vector(query);
    let mut all: Vec<(String, f64)> =
        chunks.iter().map(|c| (c.chunk_id.clone(), oracle_cosine(&q, &oracle_vector(&c.text)))).collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

fn assert_matches_oracle(index: &Index, chunks: &[Chunk], query: &str, k: usize) -> Result<(), TestCaseError> {
    let embedder = HashEmbedder::default();
    let got = index.search_text(&embedder, query, k).unwrap();
    let want = oracle_search(chunks, query, k);
    prop_assert_eq!(got.len(), want.len());
    for (g, (id, score)) in got.iter().zip(&want) {
        prop_assert!((g.score - score).abs() <= 1e-9, "score {} vs {}", g.score, score);
        prop_assert!(g.score >= -1.0 && g.score <= 1.0);
        // ids must agree unless the oracle itself has a float-level tie
        if g.chunk.chunk_id != *id {
            prop_assert!((g.score - score).abs() <= 1e-12);
        }
    }
    Ok(())
}

const VOCAB: &[&str] = &[
    "leave", "policy", "annual", "days", "audit", "quality", "salary", "overtime", "shift", "canteen", "transport",
    "safety", "shoes", "medical", "allowance", "supervisor", "training", "defect", "sampling", "batch", "report",
    "employee", "contractor", "holiday", "friday", "office", "record", "inspection", "fabric", "dyeing",
];

fn text_strategy() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(VOCAB), 1..25).prop_map(|w| w.join(" "))
}

#[test]
fn disjoint_texts_on_distinct_buckets_are_orthogonal() {
    let e = HashEmbedder::default();
    // brute-force scan for a word pair landing in different buckets
    let (a, b) = VOCAB
        .iter()
        .flat_map(|a| VOCAB.iter().map(move |b| (*a, *b)))
        .find(|(a, b)| a != b && e.bucket(a) != e.bucket(b))
        .unwrap();
    let cos = e.embed(a).unwrap().dot(&e.embed(b).unwrap());
    assert_eq!(cos, 0.0);
}

#[test]
fn stored_vectors_are_unit_norm() {
    let chunks: Vec<Chunk> = VOCAB.iter().enumerate().map(|(i, w)| chunk(i, format!("{w} {w} report"))).collect();
    let index = Index::build(&chunks, &HashEmbedder::default()).unwrap();
    for c in &chunks {
        assert!((index.vector(&c.chunk_id).unwrap().norm() - 1.0).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn search_equals_brute_force(texts in prop::collection::vec(text_strategy(), 1..60), query in text_strategy(), k in 1usize..8) {
        let chunks: Vec<Chunk> = texts.into_iter().enumerate().map(|(i, t)| chunk(i, t)).collect();
        let index = Index::build(&chunks, &HashEmbedder::default()).unwrap();
        assert_matches_oracle(&index, &chunks, &query, k)?;
    }

    #[test]
    fn self_query_scores_one(texts in prop::collection::vec(text_strategy(), 1..30), pick in any::<prop::sample::Index>()) {
        let chunks: Vec<Chunk> = texts.into_iter().enumerate().map(|(i, t)| chunk(i, t)).collect();
        let index = Index::build(&chunks, &HashEmbedder::default()).unwrap();
        let target = &chunks[pick.index(chunks.len())];
        let hits = index.search(index.vector(&target.chunk_id).unwrap(), 1).unwrap();
        prop_assert!((hits[0].score - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rebuild_and_reload_give_identical_results(texts in prop::collection::vec(text_strategy(), 1..30), queries in prop::collection::vec(text_strategy(), 1..5)) {
        let chunks: Vec<Chunk> = texts.into_iter().enumerate().map(|(i, t)| chunk(i, t)).collect();
        let e = HashEmbedder::default();
        let first = Index::build(&chunks, &e).unwrap();
        let second = Index::build(&chunks, &e).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("i.jsonl");
        first.save(&path).unwrap();
        let loaded = Index::load(&path, &chunks).unwrap();
        for q in &queries {
            let a = first.search_text(&e, q, 4).unwrap();
            prop_assert_eq!(&a, &second.search_text(&e, q, 4).unwrap());
            prop_assert_eq!(&a, &loaded.search_text(&e, q, 4).unwrap());
        }
    }
}

#[test]
fn fifty_chunk_index_k4_matches_brute_force() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let chunks: Vec<Chunk> = (0..50)
        .map(|i| {
            let n = rng.gen_range(3..30);
            chunk(i, (0..n).map(|_| VOCAB[rng.gen_range(0..VOCAB.len())]).collect::<Vec<_>>().join(" "))
        })
        .collect();
    let index = Index::build(&chunks, &HashEmbedder::default()).unwrap();
    let query = "annual leave days for contractor";
    let got: Vec<_> = index
        .search_text(&HashEmbedder::default(), query, 4)
        .unwrap()
        .into_iter()
        .map(|h| (h.chunk.chunk_id, h.score))
        .collect();
    let want = oracle_search(&chunks, query, 4);
    for (g, w) in got.iter().zip(&want) {
        assert!((g.1 - w.1).abs() < 1e-9);
    }
    assert_eq!(got.len(), 4);
}
