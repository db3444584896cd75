use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{Chunk, Chunker, Document};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("failed to write chunk store {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to read chunk store {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("chunk store {path} line {line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestSummary {
    pub documents: usize,
    pub chunks: usize,
}

/// Chunks every document in corpus order.
pub fn ingest_documents(corpus: &[Document], chunker: &Chunker) -> Vec<Chunk> {
    corpus.iter().flat_map(|doc| chunker.chunk(doc)).collect()
}

/// Chunks the corpus and writes the JSONL chunk store to `store_path`.
pub fn ingest(corpus: &[Document], chunker: &Chunker, store_path: &Path) -> Result<IngestSummary, StoreError> {
    if corpus.is_empty() {
        return Err(StoreError::EmptyCorpus);
    }
    let chunks = ingest_documents(corpus, chunker);
    write_store(&chunks, store_path)?;
    Ok(IngestSummary { documents: corpus.len(), chunks: chunks.len() })
}

/// One JSON object per line, LF-terminated, in the given order.
pub fn write_store(chunks: &[Chunk], path: &Path) -> Result<(), StoreError> {
    let write_err = |source| StoreError::Write { path: path.to_path_buf(), source };
    let mut out = BufWriter::new(File::create(path).map_err(write_err)?);
    for chunk in chunks {
        let line = serde_json::to_string(chunk).expect("chunk serializes");
        out.write_all(line.as_bytes()).map_err(write_err)?;
        out.write_all(b"\n").map_err(write_err)?;
    }
    out.flush().map_err(write_err)
}

pub fn load_store(path: &Path) -> Result<Vec<Chunk>, StoreError> {
    let read_err = |source| StoreError::Read { path: path.to_path_buf(), source };
    let reader = BufReader::new(File::open(path).map_err(read_err)?);
    let mut chunks = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(read_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let chunk = serde_json::from_str(&line).map_err(|e| StoreError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        chunks.push(chunk);
    }
    Ok(chunks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ChunkParams, ChunkStrategy, Collection};

    fn doc(id: &str, len: usize) -> Document {
        Document::new(id, Collection::Other, &"a".repeat(len), format!("{id}.txt"))
    }

    #[test]
    fn ingest_counts_and_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let chunker = Chunker::new(ChunkStrategy::FixedWindow, ChunkParams::default());
        let corpus = vec![doc("a", 500), doc("b", 500)];
        let first = dir.path().join("one.jsonl");
        let second = dir.path().join("two.jsonl");
        let summary = ingest(&corpus, &chunker, &first).unwrap();
        assert_eq!(summary, IngestSummary { documents: 2, chunks: 2 });
        ingest(&corpus, &chunker, &second).unwrap();
        assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());

        let long = ingest(&[doc("c", 2500)], &chunker, &first).unwrap();
        assert_eq!(long.chunks, 3);
    }

    #[test]
    fn store_line_has_exact_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        let chunker = Chunker::new(ChunkStrategy::FixedWindow, ChunkParams::default());
        ingest(&[doc("a", 3)], &chunker, &path).unwrap();
        let raw = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            raw,
            "{\"doc_id\":\"a\",\"chunk_id\":\"a#0000\",\"text\":\"aaa\",\"char_start\":0,\"char_end\":3,\"strategy\":\"FixedWindow\"}\n"
        );
        assert_eq!(load_store(&path).unwrap().len(), 1);
    }

    #[test]
    fn empty_corpus_and_bad_path() {
        let chunker = Chunker::new(ChunkStrategy::FixedWindow, ChunkParams::default());
        assert!(matches!(ingest(&[], &chunker, Path::new("x")), Err(StoreError::EmptyCorpus)));
        let err = ingest(&[doc("a", 3)], &chunker, Path::new("/nonexistent/dir/s.jsonl")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/s.jsonl"));
    }
}
