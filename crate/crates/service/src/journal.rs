//! Append-only JSONL journal. One record per line, tagged by `kind`.

use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use polyrag_core::conversation::{ChatTurn, Channel};

use crate::message::OutboundMessage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub session_id: String,
    pub channel: Channel,
    pub sender_id: String,
    pub message_id: String,
    /// Text as the user wrote or spoke it, before routing.
    pub original_text: String,
    pub turn: ChatTurn,
    pub response: OutboundMessage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JournalRecord {
    SessionCreated { session_id: String, channel: Channel, sender_id: String, at: DateTime<Utc> },
    Turn(Box<TurnRecord>),
    SessionExpired { session_id: String, at: DateTime<Utc> },
    Complaint {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session_id: Option<String>,
        text: String,
        at: DateTime<Utc>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum JournalError {
    #[error("journal {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("journal {path} is corrupt at byte offset {offset}: {message}")]
    Corrupt { path: PathBuf, offset: u64, message: String },
    #[error("journal record could not be encoded: {0}")]
    Encode(#[from] serde_json::Error),
}

/// A record and the byte offset of the line it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Replayed {
    pub offset: u64,
    pub record: JournalRecord,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayReport {
    pub records: Vec<Replayed>,
    /// Bytes of an unterminated, unparseable final line that were dropped.
    pub truncated_bytes: u64,
}

#[derive(Debug)]
pub struct Journal {
    path: PathBuf,
    file: Mutex<File>,
}

/// Parses journal bytes. An unterminated last line is kept if it parses and
/// dropped otherwise; any other bad line is corruption.
pub fn parse_journal(path: &Path, bytes: &[u8]) -> Result<ReplayReport, JournalError> {
    let mut report = ReplayReport::default();
    let mut offset = 0usize;
    while offset < bytes.len() {
        let rest = &bytes[offset..];
        let (line, terminated) = match rest.iter().position(|&b| b == b'\n') {
            Some(i) => (&rest[..i], true),
            None => (rest, false),
        };
        let next = offset + line.len() + usize::from(terminated);
        if line.iter().all(u8::is_ascii_whitespace) {
            offset = next;
            continue;
        }
        match serde_json::from_slice::<JournalRecord>(line) {
            Ok(record) => report.records.push(Replayed { offset: offset as u64, record }),
            Err(_) if !terminated => report.truncated_bytes = line.len() as u64,
            Err(e) => {
                return Err(JournalError::Corrupt { path: path.to_path_buf(), offset: offset as u64, message: e.to_string() })
            }
        }
        offset = next;
    }
    Ok(report)
}

impl Journal {
    /// Opens (creating if needed) and replays the journal, repairing a torn
    /// final line so later appends start on a fresh line.
    pub fn open(path: &Path) -> Result<(Self, ReplayReport), JournalError> {
        let io = |source| JournalError::Io { path: path.to_path_buf(), source };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(path).map_err(io)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(io)?;
        let report = parse_journal(path, &bytes)?;
        if report.truncated_bytes > 0 {
            file.set_len(bytes.len() as u64 - report.truncated_bytes).map_err(io)?;
        } else if bytes.last().is_some_and(|&b| b != b'\n') {
            file.write_all(b"\n").map_err(io)?;
        }
        Ok((Self { path: path.to_path_buf(), file: Mutex::new(file) }, report))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes one record as a single line with one write call.
    pub fn append(&self, record: &JournalRecord) -> Result<(), JournalError> {
        let mut line = serde_json::to_vec(record)?;
        line.push(b'\n');
        let mut file = self.file.lock().unwrap_or_else(|p| p.into_inner());
        file.write_all(&line).map_err(|source| JournalError::Io { path: self.path.clone(), source })
    }
}
