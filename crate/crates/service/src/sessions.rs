//! Session store: in-memory maps rebuilt from the journal on startup.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex, MutexGuard};

use chrono::{DateTime, Duration, Utc};

use polyrag_core::conversation::{ChatTurn, Channel, Session};

use crate::analytics::{Analytics, AnalyticsSnapshot};
use crate::journal::{Journal, JournalError, JournalRecord, ReplayReport, TurnRecord};
use crate::message::OutboundMessage;

pub const DEFAULT_SESSION_TTL_SECS: i64 = 24 * 60 * 60;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error(transparent)]
    Journal(#[from] JournalError),
    #[error("unknown session {0}")]
    UnknownSession(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredSession {
    pub session: Session,
    pub sender_id: String,
    pub expired: bool,
    /// Journaled turn records, in order, for transcripts.
    pub records: Vec<TurnRecord>,
}

#[derive(Debug, Default)]
struct State {
    sessions: HashMap<String, StoredSession>,
    active: HashMap<(Channel, String), String>,
    responses: HashMap<(String, String), OutboundMessage>,
    locks: HashMap<String, Arc<Mutex<()>>>,
}

impl State {
    fn apply(&mut self, record: &JournalRecord) -> Result<(), String> {
        match record {
            JournalRecord::SessionCreated { session_id, channel, sender_id, at } => {
                if self.sessions.contains_key(session_id) {
                    return Err(format!("session {session_id} created twice"));
                }
                self.sessions.insert(
                    session_id.clone(),
                    StoredSession {
                        session: Session::new(session_id.clone(), *channel, *at),
                        sender_id: sender_id.clone(),
                        expired: false,
                        records: Vec::new(),
                    },
                );
                self.active.insert((*channel, sender_id.clone()), session_id.clone());
            }
            JournalRecord::Turn(t) => {
                let stored = self.sessions.get_mut(&t.session_id).ok_or_else(|| format!("turn for unknown session {}", t.session_id))?;
                stored.session.push_turn(t.turn.clone());
                stored.records.push((**t).clone());
                self.responses.insert((t.sender_id.clone(), t.message_id.clone()), t.response.clone());
            }
            JournalRecord::SessionExpired { session_id, .. } => {
                let stored = self.sessions.get_mut(session_id).ok_or_else(|| format!("expiry of unknown session {session_id}"))?;
                stored.expired = true;
                let key = (stored.session.channel, stored.sender_id.clone());
                if self.active.get(&key) == Some(session_id) {
                    self.active.remove(&key);
                }
            }
            JournalRecord::Complaint { .. } => {}
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct SessionStore {
    journal: Journal,
    ttl: Duration,
    state: Mutex<State>,
    analytics: Mutex<Analytics>,
}

/// A resolved session plus the lock that serializes its turns.
#[derive(Debug, Clone)]
pub struct SessionHandle {
    pub session_id: String,
    pub lock: Arc<Mutex<()>>,
    pub created: bool,
}

impl SessionStore {
    /// Opens the journal at `path` and replays it.
    pub fn open(path: &Path, ttl: Duration) -> Result<(Self, ReplayReport), JournalError> {
        let (journal, report) = Journal::open(path)?;
        let mut state = State::default();
        let mut analytics = Analytics::new();
        for r in &report.records {
            state.apply(&r.record).map_err(|message| JournalError::Corrupt { path: path.to_path_buf(), offset: r.offset, message })?;
            analytics.apply(&r.record);
        }
        Ok((Self { journal, ttl, state: Mutex::new(state), analytics: Mutex::new(analytics) }, report))
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    pub fn journal_path(&self) -> &Path {
        self.journal.path()
    }

    fn state(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Response previously returned for this delivery, if any.
    pub fn cached_response(&self, sender_id: &str, message_id: &str) -> Option<OutboundMessage> {
        self.state().responses.get(&(sender_id.to_string(), message_id.to_string())).cloned()
    }

    /// Finds the live session for this sender, preferring `requested` when it
    /// belongs to them, expiring an idle one and creating a fresh one as needed.
    pub fn resolve(
        &self,
        channel: Channel,
        sender_id: &str,
        requested: Option<&str>,
        now: DateTime<Utc>,
    ) -> Result<SessionHandle, JournalError> {
        let mut state = self.state();
        let candidate = requested
            .filter(|id| state.sessions.get(*id).is_some_and(|s| !s.expired && s.sender_id == sender_id && s.session.channel == channel))
            .map(str::to_string)
            .or_else(|| state.active.get(&(channel, sender_id.to_string())).cloned());
        if let Some(id) = candidate {
            let stored = &state.sessions[&id];
            if !stored.expired && now - stored.session.last_active <= self.ttl {
                let lock = state.locks.entry(id.clone()).or_default().clone();
                return Ok(SessionHandle { session_id: id, lock, created: false });
            }
            if !stored.expired {
                let record = JournalRecord::SessionExpired { session_id: id.clone(), at: now };
                self.journal.append(&record)?;
                state.apply(&record).expect("session exists");
            }
        }
        let id = uuid::Uuid::new_v4().to_string();
        let record = JournalRecord::SessionCreated { session_id: id.clone(), channel, sender_id: sender_id.to_string(), at: now };
        self.journal.append(&record)?;
        state.apply(&record).expect("fresh id");
        let lock = state.locks.entry(id.clone()).or_default().clone();
        Ok(SessionHandle { session_id: id, lock, created: true })
    }

    pub fn history(&self, session_id: &str) -> Vec<ChatTurn> {
        self.state().sessions.get(session_id).map(|s| s.session.turns.clone()).unwrap_or_default()
    }

    /// Journals the turn, then makes it visible in memory, analytics and the
    /// idempotency cache. Returns the turn as stored.
    pub fn append_turn(&self, mut record: TurnRecord) -> Result<ChatTurn, StoreError> {
        let mut state = self.state();
        let Some(stored) = state.sessions.get(&record.session_id) else {
            return Err(StoreError::UnknownSession(record.session_id));
        };
        if let Some(last) = stored.session.turns.last() {
            record.turn.timestamp = record.turn.timestamp.max(last.timestamp);
        }
        let record = JournalRecord::Turn(Box::new(record));
        self.journal.append(&record)?;
        state.apply(&record).expect("session checked above");
        drop(state);
        self.analytics.lock().unwrap_or_else(|p| p.into_inner()).apply(&record);
        let JournalRecord::Turn(t) = record else { unreachable!() };
        Ok(t.turn)
    }

    pub fn record_complaint(&self, session_id: Option<String>, text: String, now: DateTime<Utc>) -> Result<(), JournalError> {
        let record = JournalRecord::Complaint { session_id, text, at: now };
        self.journal.append(&record)?;
        self.analytics.lock().unwrap_or_else(|p| p.into_inner()).apply(&record);
        Ok(())
    }

    pub fn get(&self, session_id: &str) -> Option<StoredSession> {
        self.state().sessions.get(session_id).cloned()
    }

    pub fn session_count(&self) -> usize {
        self.state().sessions.len()
    }

    pub fn turn_count(&self) -> usize {
        self.state().sessions.values().map(|s| s.session.turns.len()).sum()
    }

    pub fn analytics(&self) -> AnalyticsSnapshot {
        self.analytics.lock().unwrap_or_else(|p| p.into_inner()).snapshot()
    }
}
