//! Embedding and exact top-k cosine retrieval.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::Chunk;
use crate::text;

pub const DEFAULT_DIMENSION: usize = 256;
/// Default retrieval depth.
pub const DEFAULT_K: usize = 4;

/// A dense embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(dimension: usize) -> Self {
        Self(vec![0.0; dimension])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    /// Scaled to unit length; the zero vector stays zero.
    pub fn normalized(mut self) -> Self {
        let norm = self.norm();
        if norm > 0.0 {
            self.0.iter_mut().for_each(|x| *x /= norm);
        }
        self
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmbedError {
    #[error("text has no word tokens")]
    EmptyText,
    #[error("embedding provider {provider} failed: {message}")]
    Provider { provider: String, message: String },
}

/// Turns text into a fixed-dimension vector.
pub trait Embedder: Send + Sync {
    fn name(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vector, EmbedError>;
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes.iter().fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// Hashed bag of words: each token adds one to bucket `fnv1a64(token) mod
/// dimension`, and the result is L2-normalized.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dimension: usize,
}

impl HashEmbedder {
    pub const NAME: &'static str = "hash-bow-v1";

    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        Self { dimension }
    }

    pub fn bucket(&self, token: &str) -> usize {
        (fnv1a64(token.as_bytes()) % self.dimension as u64) as usize
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_DIMENSION)
    }
}

impl Embedder for HashEmbedder {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vector, EmbedError> {
        let tokens = text::tokens(text);
        if tokens.is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let mut values = vec![0.0; self.dimension];
        for t in &tokens {
            values[self.bucket(t)] += 1.0;
        }
        Ok(Vector(values).normalized())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredChunk {
    pub chunk: Chunk,
    pub score: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error("no chunks to index")]
    NoChunks,
    #[error("duplicate chunk id `{0}`")]
    DuplicateChunk(String),
    #[error("embedding chunk `{chunk_id}` failed: {source}")]
    Embed {
        chunk_id: String,
        #[source]
        source: EmbedError,
    },
    #[error("query dimension {got} does not match index dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("index file {path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("index file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone)]
struct Entry {
    chunk: Chunk,
    vector: Vector,
}

/// Exact-scan vector index. Immutable once built, so it can be shared across
/// threads behind an `Arc`.
#[derive(Debug, Clone)]
pub struct Index {
    dimension: usize,
    embedder: String,
    entries: Vec<Entry>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    dimension: usize,
    count: usize,
    embedder: String,
}

#[derive(Serialize, Deserialize)]
struct Row {
    chunk_id: String,
    vector: Vector,
}

/// Heap key: greater means a better hit (higher score, then lower chunk id).
struct Ranked<'a> {
    score: f64,
    id: &'a str,
    pos: usize,
}

impl Ord for Ranked<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score.total_cmp(&other.score).then_with(|| other.id.cmp(self.id))
    }
}

impl PartialOrd for Ranked<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Ranked<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked<'_> {}

impl Index {
    pub fn empty(dimension: usize, embedder: impl Into<String>) -> Self {
        Self { dimension, embedder: embedder.into(), entries: Vec::new() }
    }

    /// Embeds every chunk. Chunks without word tokens get the zero vector,
    /// which scores 0 against every query.
    pub fn build(chunks: &[Chunk], embedder: &dyn Embedder) -> Result<Self, IndexError> {
        if chunks.is_empty() {
            return Err(IndexError::NoChunks);
        }
        let mut seen = HashSet::new();
        let mut entries = Vec::with_capacity(chunks.len());
        for chunk in chunks {
            if !seen.insert(chunk.chunk_id.as_str()) {
                return Err(IndexError::DuplicateChunk(chunk.chunk_id.clone()));
            }
            let vector = match embedder.embed(&chunk.text) {
                Ok(v) => v,
                Err(EmbedError::EmptyText) => Vector::zeros(embedder.dimension()),
                Err(source) => return Err(IndexError::Embed { chunk_id: chunk.chunk_id.clone(), source }),
            };
            entries.push(Entry { chunk: chunk.clone(), vector });
        }
        Ok(Self { dimension: embedder.dimension(), embedder: embedder.name().to_string(), entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn embedder_name(&self) -> &str {
        &self.embedder
    }

    pub fn chunks(&self) -> impl Iterator<Item = &Chunk> {
        self.entries.iter().map(|e| &e.chunk)
    }

    pub fn contains(&self, chunk_id: &str) -> bool {
        self.entries.iter().any(|e| e.chunk.chunk_id == chunk_id)
    }

    pub fn chunk(&self, chunk_id: &str) -> Option<&Chunk> {
        self.entries.iter().find(|e| e.chunk.chunk_id == chunk_id).map(|e| &e.chunk)
    }

    /// Stored vector for a chunk.
    pub fn vector(&self, chunk_id: &str) -> Option<&Vector> {
        self.entries.iter().find(|e| e.chunk.chunk_id == chunk_id).map(|e| &e.vector)
    }

    /// Exact top-k by cosine similarity, ties broken by ascending chunk id.
    pub fn search(&self, query: &Vector, k: usize) -> Result<Vec<ScoredChunk>, IndexError> {
        if k == 0 {
            return Err(IndexError::ZeroK);
        }
        if self.entries.is_empty() {
            return Ok(Vec::new());
        }
        if query.dimension() != self.dimension {
            return Err(IndexError::DimensionMismatch { expected: self.dimension, got: query.dimension() });
        }
        let qnorm = query.norm();
        let mut heap: BinaryHeap<Reverse<Ranked<'_>>> = BinaryHeap::with_capacity(k + 1);
        for (pos, entry) in self.entries.iter().enumerate() {
            let score = if qnorm == 0.0 || entry.vector.is_zero() {
                0.0
            } else {
                (query.dot(&entry.vector) / qnorm).clamp(-1.0, 1.0)
            };
            let candidate = Ranked { score, id: &entry.chunk.chunk_id, pos };
            if heap.len() < k {
                heap.push(Reverse(candidate));
            } else if heap.peek().is_some_and(|Reverse(worst)| candidate > *worst) {
                heap.pop();
                heap.push(Reverse(candidate));
            }
        }
        let mut ranked: Vec<Ranked<'_>> = heap.into_iter().map(|Reverse(r)| r).collect();
        ranked.sort_by(|a, b| b.cmp(a));
        Ok(ranked
            .into_iter()
            .map(|r| ScoredChunk { chunk: self.entries[r.pos].chunk.clone(), score: r.score })
            .collect())
    }

    /// Embeds `text` and searches. Text without tokens yields no hits.
    pub fn search_text(&self, embedder: &dyn Embedder, text: &str, k: usize) -> Result<Vec<ScoredChunk>, IndexError> {
        match embedder.embed(text) {
            Ok(v) => self.search(&v, k),
            Err(EmbedError::EmptyText) => Ok(Vec::new()),
            Err(source) => Err(IndexError::Embed { chunk_id: "<query>".into(), source }),
        }
    }

    /// Header line, then one `{"chunk_id","vector"}` row per chunk.
    pub fn save(&self, path: &Path) -> Result<(), IndexError> {
        let io = |source| IndexError::Io { path: path.to_path_buf(), source };
        let mut out = BufWriter::new(File::create(path).map_err(io)?);
        let header = Header { dimension: self.dimension, count: self.entries.len(), embedder: self.embedder.clone() };
        writeln!(out, "{}", serde_json::to_string(&header).expect("header serializes")).map_err(io)?;
        for e in &self.entries {
            let row = Row { chunk_id: e.chunk.chunk_id.clone(), vector: e.vector.clone() };
            writeln!(out, "{}", serde_json::to_string(&row).expect("row serializes")).map_err(io)?;
        }
        out.flush().map_err(io)
    }

    /// Reads an index file, resolving chunk text from `chunks`.
    pub fn load(path: &Path, chunks: &[Chunk]) -> Result<Self, IndexError> {
        let io = |source| IndexError::Io { path: path.to_path_buf(), source };
        let format = |message: String| IndexError::Format { path: path.to_path_buf(), message };
        let by_id: BTreeMap<&str, &Chunk> = chunks.iter().map(|c| (c.chunk_id.as_str(), c)).collect();
        let mut lines = BufReader::new(File::open(path).map_err(io)?).lines();
        let header: Header = match lines.next() {
            Some(line) => serde_json::from_str(&line.map_err(io)?).map_err(|e| format(format!("header: {e}")))?,
            None => return Err(format("missing header line".into())),
        };
        let mut entries = Vec::with_capacity(header.count);
        for (i, line) in lines.enumerate() {
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Row = serde_json::from_str(&line).map_err(|e| format(format!("row {}: {e}", i + 1)))?;
            if row.vector.dimension() != header.dimension {
                return Err(format(format!("row {} has dimension {}", i + 1, row.vector.dimension())));
            }
            let chunk = by_id
                .get(row.chunk_id.as_str())
                .ok_or_else(|| format(format!("chunk `{}` not in chunk store", row.chunk_id)))?;
            entries.push(Entry { chunk: (*chunk).clone(), vector: row.vector });
        }
        if entries.len() != header.count {
            return Err(format(format!("header declares {} rows, found {}", header.count, entries.len())));
        }
        Ok(Self { dimension: header.dimension, embedder: header.embedder, entries })
    }
}
