mod common;

use std::io::Write;
use std::sync::Arc;

use chrono::Duration;
use common::*;
use polyrag_core::conversation::{ChatTurn, Channel, Modality};
use polyrag_core::lang::{LangTag, Translator, TransliterationTranslator};
use polyrag_service::journal::{parse_journal, JournalError, JournalRecord, TurnRecord};
use polyrag_service::{Analytics, OutboundMessage, SessionStore};
use proptest::prelude::*;

fn translit() -> Arc<dyn Translator> {
    Arc::new(TransliterationTranslator)
}

const QUESTIONS: &[&str] = &[
    "How many days of annual leave do permanent employees of the Granite unit receive?",
    "What is the monthly medical allowance at the Cedar unit?",
    "Why do galaxies hibernate?",
    "What notice period applies at the Willow unit?",
];

#[test]
fn torn_write_is_dropped_and_full_turns_survive() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("journal.jsonl");
    let responses: Vec<_> = {
        let s = stack(&path, translit());
        (0..6).map(|i| s.service.handle_chat(text_msg(Channel::Webhook, "u", &format!("m{i}"), QUESTIONS[i % 4])).unwrap()).collect()
    };
    // a crash in the middle of the seventh append
    let mut f = std::fs::OpenOptions::new().append(true).open(&path).unwrap();
    f.write_all(br#"{"kind":"turn","session_id":"#).unwrap();
    drop(f);

    let s = stack(&path, translit());
    assert_eq!(s.service.store().turn_count(), 6);
    for (i, r) in responses.iter().enumerate() {
        let again = s.service.handle_chat(text_msg(Channel::Webhook, "u", &format!("m{i}"), "ignored")).unwrap();
        assert_eq!(&again, r);
    }
    assert_eq!(s.service.store().turn_count(), 6);
    let t = s.service.transcript(&responses[0].session_id).unwrap();
    assert_eq!(t.turns.len(), 6);
    // and new work appends cleanly after the repaired tail
    s.service.handle_chat(text_msg(Channel::Webhook, "u", "m6", QUESTIONS[0])).unwrap();
    drop(s);
    assert_eq!(stack(&path, translit()).service.store().turn_count(), 7);
}

#[test]
fn corrupt_middle_line_is_an_error_with_offset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("journal.jsonl");
    {
        let s = stack(&path, translit());
        s.service.handle_chat(text_msg(Channel::Webhook, "u", "m1", QUESTIONS[0])).unwrap();
    }
    let good = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, format!("{good}garbage\n{good}")).unwrap();
    match SessionStore::open(&path, Duration::hours(24)) {
        Err(JournalError::Corrupt { offset, .. }) => assert_eq!(offset, good.len() as u64),
        other => panic!("{other:?}"),
    }
}

#[test]
fn turn_for_unknown_session_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("journal.jsonl");
    let rec = JournalRecord::SessionExpired { session_id: "ghost".into(), at: t0() };
    std::fs::write(&path, serde_json::to_string(&rec).unwrap() + "\n").unwrap();
    assert!(matches!(SessionStore::open(&path, Duration::hours(24)), Err(JournalError::Corrupt { offset: 0, .. })));
}

fn fixture_turn(i: usize, channel: Channel, voice: bool, lang: &str, refused: bool) -> JournalRecord {
    let lang = LangTag::new(lang);
    JournalRecord::Turn(Box::new(TurnRecord {
        session_id: format!("s{i}"),
        channel,
        sender_id: format!("u{i}"),
        message_id: "m".into(),
        original_text: "q".into(),
        turn: ChatTurn {
            question_en: "q".into(),
            retrieval_query: "q".into(),
            answer_en: "a".into(),
            sources: vec![],
            refused,
            timestamp: t0() + Duration::seconds(i as i64),
            modality: if voice { Modality::Voice } else { Modality::Text },
            original_lang: lang.clone(),
            degraded: false,
        },
        response: OutboundMessage {
            recipient_id: format!("u{i}"),
            session_id: format!("s{i}"),
            text: "a".into(),
            audio: None,
            lang,
            sources: vec![],
            refused,
            degraded: false,
        },
    }))
}

// 3 and 7 are coprime to 1150, so the strides hit exact counts.
/// 1150 one-turn sessions in one day: 700 Web + 450 Webhook, 517 voice,
/// 679 non-English.
fn engagement_journal() -> String {
    let mut out = String::new();
    for i in 0..1150 {
        let channel = if i < 700 { Channel::Web } else { Channel::Webhook };
        let created = JournalRecord::SessionCreated { session_id: format!("s{i}"), channel, sender_id: format!("u{i}"), at: t0() };
        let lang = if (i * 3) % 1150 < 679 { ["ur", "pa"][i % 2] } else { "en" };
        let voice = (i * 7) % 1150 < 517;
        for r in [created, fixture_turn(i, channel, voice, lang, false)] {
            out += &serde_json::to_string(&r).unwrap();
            out.push('\n');
        }
    }
    out
}

#[test]
fn engagement_fixture_matches_reported_figures() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("journal.jsonl");
    std::fs::write(&path, engagement_journal()).unwrap();
    let (store, _) = SessionStore::open(&path, Duration::hours(24)).unwrap();
    let snap = store.analytics();
    assert_eq!(snap.conversations, 1150);
    assert_eq!((snap.voice_count, snap.non_english_count), (517, 679));
    assert_eq!(snap.conversations_per_channel[&Channel::Web], 700);
    assert_eq!(snap.conversations_per_channel[&Channel::Webhook], 450);
    assert_eq!(snap.conversations_per_day["2024-03-01"], 1150);
    assert!((snap.voice_fraction - 0.4496).abs() < 1e-4);
    assert_eq!((snap.voice_display.as_str(), snap.non_english_display.as_str()), ("45%", "59%"));
}

#[derive(Debug, Clone)]
struct Delivery {
    sender: usize,
    message: usize,
    question: usize,
    lang: usize,
    voice: bool,
}

fn delivery() -> impl Strategy<Value = Delivery> {
    (0usize..3, 0usize..5, 0usize..QUESTIONS.len(), 0usize..3, any::<bool>())
        .prop_map(|(sender, message, question, lang, voice)| Delivery { sender, message, question, lang, voice })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn replays_log_once_and_analytics_recompute(deliveries in prop::collection::vec(delivery(), 1..30), complaints in 0usize..3) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("journal.jsonl");
        let s = stack(&path, translit());
        let mut first = std::collections::HashMap::new();
        for d in &deliveries {
            let lang = [LangTag::en(), LangTag::ur(), LangTag::pa()][d.lang].clone();
            let text = TransliterationTranslator.translate(QUESTIONS[d.question], &LangTag::en(), &lang).unwrap();
            // the channel is fixed per sender so (channel, sender) stays one identity
            let channel = if d.sender % 2 == 0 { Channel::Web } else { Channel::Webhook };
            let mut msg = text_msg(channel, &format!("u{}", d.sender), &format!("m{}", d.message), &text);
            if d.voice {
                msg.body = polyrag_service::MessageBody::Audio(polyrag_service::AudioInput::Inline(polyrag_core::speech::mock_audio(&text, &lang)));
            }
            let out = s.service.handle_chat(msg).unwrap();
            let key = (d.sender, d.message);
            match first.get(&key) {
                Some(prev) => prop_assert_eq!(prev, &out),
                None => {
                    // language and modality invariants on fresh turns
                    prop_assert_eq!(&out.lang.code, &lang.code);
                    prop_assert_eq!(out.audio.is_some(), d.voice);
                    first.insert(key, out);
                }
            }
            s.clock.advance(Duration::seconds(30));
        }
        for i in 0..complaints {
            s.service.record_complaint(None, &format!("complaint {i}")).unwrap();
        }
        prop_assert_eq!(s.service.store().turn_count(), first.len());
        let live = s.service.analytics();
        let bytes = std::fs::read(&path).unwrap();
        let records: Vec<_> = parse_journal(&path, &bytes).unwrap().records.into_iter().map(|r| r.record).collect();
        prop_assert_eq!(&Analytics::from_records(&records).snapshot(), &live);
        prop_assert_eq!(live.complaint_count as usize, complaints);
        prop_assert_eq!(live.conversations as usize, first.len());
        for r in &records {
            if let JournalRecord::Turn(t) = r {
                prop_assert!(english_is(&t.turn.retrieval_query));
                prop_assert!(english_is(&t.turn.question_en));
            }
        }
        drop(s);
        let restarted = stack(&path, translit());
        prop_assert_eq!(restarted.service.analytics(), live);
        prop_assert_eq!(restarted.service.store().turn_count(), first.len());
    }
}
