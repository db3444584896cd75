//! Engagement counters. One conversation = one logged turn.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use polyrag_core::conversation::{ChatTurn, Channel, Modality};

use crate::journal::JournalRecord;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Analytics {
    conversations: u64,
    per_channel: BTreeMap<Channel, u64>,
    per_day: BTreeMap<String, u64>,
    voice: u64,
    non_english: u64,
    refusals: u64,
    complaints: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsSnapshot {
    pub conversations: u64,
    pub conversations_per_channel: BTreeMap<Channel, u64>,
    /// Keyed by UTC date, `YYYY-MM-DD`.
    pub conversations_per_day: BTreeMap<String, u64>,
    pub voice_count: u64,
    pub non_english_count: u64,
    pub voice_fraction: f64,
    pub non_english_fraction: f64,
    pub refusal_count: u64,
    pub complaint_count: u64,
    /// `voice_fraction` as a whole percentage, e.g. "45%".
    pub voice_display: String,
    pub non_english_display: String,
}

/// Whole-number percentage; rounding happens only here.
pub fn percent(fraction: f64) -> String {
    format!("{:.0}%", fraction * 100.0)
}

fn fraction(n: u64, d: u64) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

impl Analytics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_turn(&mut self, channel: Channel, turn: &ChatTurn) {
        self.conversations += 1;
        *self.per_channel.entry(channel).or_default() += 1;
        *self.per_day.entry(turn.timestamp.date_naive().to_string()).or_default() += 1;
        self.voice += u64::from(turn.modality == Modality::Voice);
        self.non_english += u64::from(!turn.original_lang.is_english());
        self.refusals += u64::from(turn.refused);
    }

    pub fn record_complaint(&mut self) {
        self.complaints += 1;
    }

    pub fn apply(&mut self, record: &JournalRecord) {
        match record {
            JournalRecord::Turn(t) => self.record_turn(t.channel, &t.turn),
            JournalRecord::Complaint { .. } => self.record_complaint(),
            JournalRecord::SessionCreated { .. } | JournalRecord::SessionExpired { .. } => {}
        }
    }

    /// Recomputes from scratch over a journal.
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a JournalRecord>) -> Self {
        let mut a = Self::new();
        for r in records {
            a.apply(r);
        }
        a
    }

    pub fn snapshot(&self) -> AnalyticsSnapshot {
        let mut per_channel: BTreeMap<Channel, u64> = Channel::ALL.iter().map(|&c| (c, 0)).collect();
        per_channel.extend(self.per_channel.iter().map(|(&c, &n)| (c, n)));
        let voice_fraction = fraction(self.voice, self.conversations);
        let non_english_fraction = fraction(self.non_english, self.conversations);
        AnalyticsSnapshot {
            conversations: self.conversations,
            conversations_per_channel: per_channel,
            conversations_per_day: self.per_day.clone(),
            voice_count: self.voice,
            non_english_count: self.non_english,
            voice_fraction,
            non_english_fraction,
            refusal_count: self.refusals,
            complaint_count: self.complaints,
            voice_display: percent(voice_fraction),
            non_english_display: percent(non_english_fraction),
        }
    }
}
