//! Corpus loading, chunking and the JSONL chunk store.

mod chunk;
mod store;

pub use chunk::{
    chunk_entity, chunk_fixed, chunk_paragraph, chunk_semantic_unit, chunk_topic, fixed_spans,
    Chunk, ChunkError, ChunkParams, ChunkStrategy, Chunker, EntityLexicon, HeadingPattern,
    TOPIC_JOIN_THRESHOLD,
};
pub use store::{ingest, ingest_documents, load_store, write_store, IngestSummary, StoreError};

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Which document collection a file belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Collection {
    Hr,
    Qa,
    Other,
}

impl FromStr for Collection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "HR" => Ok(Collection::Hr),
            "QA" => Ok(Collection::Qa),
            "OTHER" => Ok(Collection::Other),
            other => Err(format!("unknown collection `{other}`")),
        }
    }
}

impl fmt::Display for Collection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Collection::Hr => "HR",
            Collection::Qa => "QA",
            Collection::Other => "OTHER",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub collection: Collection,
    pub title: String,
    pub text: String,
    pub source_path: String,
}

impl Document {
    /// Builds a document from raw file contents, normalizing line endings.
    pub fn new(doc_id: impl Into<String>, collection: Collection, raw: &str, source_path: impl Into<String>) -> Self {
        let text = normalize_newlines(raw);
        let title = derive_title(&text);
        Self {
            doc_id: doc_id.into(),
            collection,
            title,
            text,
            source_path: source_path.into(),
        }
    }
}

fn normalize_newlines(raw: &str) -> String {
    raw.replace("\r\n", "\n").replace('\r', "\n")
}

fn derive_title(text: &str) -> String {
    text.lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .map(|l| l.trim_start_matches('#').trim().to_string())
        .unwrap_or_default()
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("corpus root {0} does not exist or is not a directory")]
    MissingRoot(PathBuf),
    #[error("corpus at {root} contains no loadable documents")]
    EmptyCorpus { root: PathBuf, failures: Vec<FileError> },
    #[error("failed to read manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("failed to list {path}: {source}")]
    Walk {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A file that could not be turned into a document. Loading continues past it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileError {
    pub path: PathBuf,
    pub message: String,
}

/// Result of a successful load: the documents plus any per-file failures.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub documents: Vec<Document>,
    pub failures: Vec<FileError>,
}

const TEXT_EXTENSIONS: &[&str] = &["txt", "md", "markdown"];

/// Reads a manifest CSV with header `file,collection`, keyed by the file's
/// path relative to the corpus root (forward slashes).
pub fn load_manifest(path: &Path) -> Result<BTreeMap<String, Collection>, CorpusError> {
    let manifest_err = |message: String| CorpusError::Manifest {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| manifest_err(e.to_string()))?;
    let mut map = BTreeMap::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| manifest_err(e.to_string()))?;
        let (Some(file), Some(collection)) = (record.get(0), record.get(1)) else {
            return Err(manifest_err(format!("row {} needs two columns", line + 2)));
        };
        let collection = collection
            .parse()
            .map_err(|e| manifest_err(format!("row {}: {e}", line + 2)))?;
        map.insert(file.to_string(), collection);
    }
    Ok(map)
}

/// Loads every `.txt`/`.md` file under `root` in lexicographic path order.
///
/// The document id is the relative path without its extension. Files that
/// cannot be read, are not UTF-8, are empty, or collide on id are reported
/// in [`LoadedCorpus::failures`] and skipped.
pub fn load_corpus(root: &Path, manifest: Option<&Path>) -> Result<LoadedCorpus, CorpusError> {
    if !root.is_dir() {
        return Err(CorpusError::MissingRoot(root.to_path_buf()));
    }
    let collections = match manifest {
        Some(path) => load_manifest(path)?,
        None => BTreeMap::new(),
    };

    let mut files = Vec::new();
    collect_files(root, root, &mut files)?;
    files.sort();

    let mut documents: Vec<Document> = Vec::new();
    let mut failures = Vec::new();
    let mut seen = BTreeMap::new();
    for rel in files {
        let path = root.join(&rel);
        let raw = match fs::read(&path) {
            Ok(bytes) => match String::from_utf8(bytes) {
                Ok(s) => s,
                Err(_) => {
                    failures.push(FileError { path, message: "not valid UTF-8".into() });
                    continue;
                }
            },
            Err(e) => {
                failures.push(FileError { path, message: e.to_string() });
                continue;
            }
        };
        if raw.trim().is_empty() {
            failures.push(FileError { path, message: "empty document".into() });
            continue;
        }
        let doc_id = match rel.rsplit_once('.') {
            Some((stem, _)) => stem.to_string(),
            None => rel.clone(),
        };
        if let Some(first) = seen.insert(doc_id.clone(), rel.clone()) {
            failures.push(FileError {
                path,
                message: format!("document id `{doc_id}` already used by {first}"),
            });
            continue;
        }
        let collection = collections.get(&rel).copied().unwrap_or(Collection::Other);
        documents.push(Document::new(doc_id, collection, &raw, path.to_string_lossy()));
    }

    if documents.is_empty() {
        return Err(CorpusError::EmptyCorpus { root: root.to_path_buf(), failures });
    }
    Ok(LoadedCorpus { documents, failures })
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<(), CorpusError> {
    let walk_err = |source| CorpusError::Walk { path: dir.to_path_buf(), source };
    for entry in fs::read_dir(dir).map_err(walk_err)? {
        let entry = entry.map_err(walk_err)?;
        let path = entry.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
            continue;
        }
        let is_text = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| TEXT_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if !is_text {
            continue;
        }
        let rel = path.strip_prefix(root).expect("walked path lies under root");
        let rel = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join("/");
        out.push(rel);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, contents: &[u8]) {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).unwrap();
        }
        fs::write(path, contents).unwrap();
    }

    #[test]
    fn loads_in_path_order() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "b.txt", b"world");
        write(dir.path(), "a.txt", b"hello");
        let loaded = load_corpus(dir.path(), None).unwrap();
        let ids: Vec<_> = loaded.documents.iter().map(|d| d.doc_id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
        assert_eq!(loaded.documents[0].text, "hello");
        assert!(loaded.documents.iter().all(|d| d.collection == Collection::Other));
    }

    #[test]
    fn manifest_assigns_collection() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.txt", b"hello");
        write(dir.path(), "b.txt", b"world");
        let manifest = dir.path().join("manifest.csv");
        fs::write(&manifest, "file,collection\na.txt,HR\n").unwrap();
        let loaded = load_corpus(dir.path(), Some(&manifest)).unwrap();
        assert_eq!(loaded.documents[0].collection, Collection::Hr);
        assert_eq!(loaded.documents[1].collection, Collection::Other);
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_corpus(dir.path(), None), Err(CorpusError::EmptyCorpus { .. })));
    }

    #[test]
    fn bad_files_are_collected_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "good.md", b"# Title\r\nbody");
        write(dir.path(), "bad.txt", &[0xff, 0xfe, 0x00]);
        write(dir.path(), "blank.txt", b"  \n");
        write(dir.path(), "sub/nested.txt", b"nested");
        write(dir.path(), "ignored.json", b"{}");
        let loaded = load_corpus(dir.path(), None).unwrap();
        let ids: Vec<_> = loaded.documents.iter().map(|d| d.doc_id.as_str()).collect();
        assert_eq!(ids, ["good", "sub/nested"]);
        assert_eq!(loaded.failures.len(), 2);
        assert_eq!(loaded.documents[0].text, "# Title\nbody");
        assert_eq!(loaded.documents[0].title, "Title");
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.md", b"one");
        write(dir.path(), "a.txt", b"two");
        let loaded = load_corpus(dir.path(), None).unwrap();
        assert_eq!(loaded.documents.len(), 1);
        assert_eq!(loaded.failures.len(), 1);
    }
}
