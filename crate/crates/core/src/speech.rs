//! Speech-to-text and text-to-speech behind provider traits.
//!
//! Transcription follows the x-to-1 pattern: whatever language is spoken,
//! the transcript handed on is English, with the spoken language recorded.
//! The offline mocks carry their text inside a real WAV container so audio
//! round-trips are bit-exact.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::lang::{select_provider, Capability, LangTag, LanguageRouter, ProviderProfile, RouteError, SelectionError};
use crate::provider::{InFlightLimit, ProviderError};

pub const WAV_MIME: &str = "audio/wav";
pub const MOCK_SAMPLE_RATE: u32 = 16_000;
pub const MOCK_CHANNELS: u16 = 1;
pub const MOCK_BITS_PER_SAMPLE: u16 = 16;
pub const WAV_HEADER_LEN: usize = 44;

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AudioBlob {
    pub bytes: Vec<u8>,
    pub mime: String,
    pub sample_rate: u32,
    pub channels: u16,
}

impl fmt::Debug for AudioBlob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AudioBlob")
            .field("len", &self.bytes.len())
            .field("mime", &self.mime)
            .field("sample_rate", &self.sample_rate)
            .field("channels", &self.channels)
            .finish()
    }
}

impl AudioBlob {
    /// Wraps bytes declared as WAV, reading rate and channels from the header
    /// when it parses.
    pub fn wav(bytes: Vec<u8>) -> Self {
        let (sample_rate, channels) = parse_wav(&bytes)
            .map(|w| (w.sample_rate, w.channels))
            .unwrap_or((MOCK_SAMPLE_RATE, MOCK_CHANNELS));
        Self { bytes, mime: WAV_MIME.into(), sample_rate, channels }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WavError {
    #[error("not a RIFF/WAVE container")]
    NotWave,
    #[error("truncated WAV: {0}")]
    Truncated(&'static str),
    #[error("WAV has no {0} chunk")]
    MissingChunk(&'static str),
}

/// The parts of a WAV container the gateway cares about.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WavInfo<'a> {
    pub format_tag: u16,
    pub channels: u16,
    pub sample_rate: u32,
    pub bits_per_sample: u16,
    pub data: &'a [u8],
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Walks the RIFF chunks, requiring `fmt ` before `data`.
pub fn parse_wav(bytes: &[u8]) -> Result<WavInfo<'_>, WavError> {
    if bytes.len() < 12 {
        return Err(if bytes.starts_with(b"RIFF") || bytes.is_empty() {
            WavError::Truncated("RIFF header")
        } else {
            WavError::NotWave
        });
    }
    if &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(WavError::NotWave);
    }
    let mut pos = 12;
    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    loop {
        if pos + 8 > bytes.len() {
            return Err(match fmt {
                None => WavError::Truncated("fmt chunk"),
                Some(_) => WavError::MissingChunk("data"),
            });
        }
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body = pos + 8;
        if body + size > bytes.len() {
            return Err(WavError::Truncated("chunk body"));
        }
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(WavError::Truncated("fmt chunk"));
                }
                fmt = Some((u16_at(bytes, body), u16_at(bytes, body + 2), u32_at(bytes, body + 4), u16_at(bytes, body + 14)));
            }
            b"data" => {
                let (format_tag, channels, sample_rate, bits_per_sample) = fmt.ok_or(WavError::MissingChunk("fmt "))?;
                return Ok(WavInfo { format_tag, channels, sample_rate, bits_per_sample, data: &bytes[body..body + size] });
            }
            _ => {}
        }
        pos = body + size + (size & 1);
    }
}

/// 44-byte PCM header (16 kHz, mono, 16-bit) followed by `payload`,
/// zero-padded to even length.
pub fn encode_mock_wav(payload: &[u8]) -> Vec<u8> {
    let mut data = payload.to_vec();
    if data.len() % 2 == 1 {
        data.push(0);
    }
    let block_align = MOCK_CHANNELS * MOCK_BITS_PER_SAMPLE / 8;
    let byte_rate = MOCK_SAMPLE_RATE * u32::from(block_align);
    let mut out = Vec::with_capacity(WAV_HEADER_LEN + data.len());
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data.len() as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&MOCK_CHANNELS.to_le_bytes());
    out.extend_from_slice(&MOCK_SAMPLE_RATE.to_le_bytes());
    out.extend_from_slice(&byte_rate.to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&MOCK_BITS_PER_SAMPLE.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data.len() as u32).to_le_bytes());
    out.extend_from_slice(&data);
    out
}

/// Mock audio for `text` spoken in `lang`: payload `"{code}|{text}"`.
pub fn mock_audio(text: &str, lang: &LangTag) -> AudioBlob {
    AudioBlob::wav(encode_mock_wav(format!("{}|{}", lang.code, text).as_bytes()))
}

/// Inverse of [`mock_audio`]: the language code and text carried by a mock WAV.
pub fn decode_mock_payload(audio: &AudioBlob) -> Result<(String, String), SpeechError> {
    let wav = parse_wav(&audio.bytes).map_err(|e| SpeechError::Undecodable(e.to_string()))?;
    let end = wav.data.iter().rposition(|&b| b != 0).map_or(0, |i| i + 1);
    let payload = &wav.data[..end];
    if payload.is_empty() {
        return Err(SpeechError::EmptyTranscript);
    }
    let payload = std::str::from_utf8(payload).map_err(|_| SpeechError::Undecodable("payload is not UTF-8 text".into()))?;
    let (code, text) = payload
        .split_once('|')
        .ok_or_else(|| SpeechError::Undecodable("payload lacks a language prefix".into()))?;
    if text.trim().is_empty() {
        return Err(SpeechError::EmptyTranscript);
    }
    Ok((code.to_string(), text.to_string()))
}

/// English text plus the language that was spoken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub english_text: String,
    pub detected_lang: LangTag,
    /// What was said, in the spoken language, when the provider reports it.
    pub original_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpeechError {
    #[error("audio could not be decoded: {0}")]
    Undecodable(String),
    #[error("audio contains no speech")]
    EmptyTranscript,
    #[error("text to synthesize is empty")]
    EmptyText,
    #[error("language `{0}` is not supported for speech output")]
    UnsupportedLanguage(String),
    #[error(transparent)]
    Routing(#[from] RouteError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

pub trait SpeechToText: Send + Sync {
    fn name(&self) -> &str;
    /// Returns English text regardless of the spoken language.
    fn transcribe(&self, audio: &AudioBlob) -> Result<Transcript, SpeechError>;
}

pub trait TextToSpeech: Send + Sync {
    fn name(&self) -> &str;
    fn supports(&self, lang: &LangTag) -> bool;
    fn synthesize(&self, text: &str, lang: &LangTag) -> Result<AudioBlob, SpeechError>;
}

/// Decodes mock WAVs and routes their text to English.
#[derive(Debug, Clone)]
pub struct MockStt {
    router: LanguageRouter,
}

impl MockStt {
    pub const NAME: &'static str = "mock-stt";

    pub fn new(router: LanguageRouter) -> Self {
        Self { router }
    }
}

impl SpeechToText for MockStt {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn transcribe(&self, audio: &AudioBlob) -> Result<Transcript, SpeechError> {
        let (code, text) = decode_mock_payload(audio)?;
        let spoken = LangTag::new(code);
        let routed = self.router.route_inbound(&text, Some(&spoken))?;
        Ok(Transcript { english_text: routed.english_text, detected_lang: routed.original_lang, original_text: Some(routed.original_text) })
    }
}

/// Emits mock WAVs; speaks English and Urdu only.
#[derive(Debug, Clone)]
pub struct MockTts {
    languages: Vec<String>,
}

impl MockTts {
    pub const NAME: &'static str = "mock-tts";

    pub fn new() -> Self {
        Self { languages: vec!["en".into(), "ur".into()] }
    }
}

impl Default for MockTts {
    fn default() -> Self {
        Self::new()
    }
}

impl TextToSpeech for MockTts {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn supports(&self, lang: &LangTag) -> bool {
        self.languages.contains(&lang.code)
    }

    fn synthesize(&self, text: &str, lang: &LangTag) -> Result<AudioBlob, SpeechError> {
        if text.trim().is_empty() {
            return Err(SpeechError::EmptyText);
        }
        if !self.supports(lang) {
            return Err(SpeechError::UnsupportedLanguage(lang.code.clone()));
        }
        Ok(mock_audio(text, lang))
    }
}

/// STT and TTS providers, each behind its own in-flight limit.
#[derive(Clone)]
pub struct SpeechGateway {
    stt: Arc<dyn SpeechToText>,
    tts: Arc<dyn TextToSpeech>,
    stt_limit: Arc<InFlightLimit>,
    tts_limit: Arc<InFlightLimit>,
}

impl fmt::Debug for SpeechGateway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpeechGateway").field("stt", &self.stt.name()).field("tts", &self.tts.name()).finish()
    }
}

impl SpeechGateway {
    pub fn new(stt: Arc<dyn SpeechToText>, tts: Arc<dyn TextToSpeech>) -> Self {
        Self::with_limits(stt, tts, crate::provider::DEFAULT_MAX_IN_FLIGHT, crate::provider::DEFAULT_MAX_IN_FLIGHT)
    }

    pub fn with_limits(stt: Arc<dyn SpeechToText>, tts: Arc<dyn TextToSpeech>, stt_max: usize, tts_max: usize) -> Self {
        Self { stt, tts, stt_limit: Arc::new(InFlightLimit::new(stt_max)), tts_limit: Arc::new(InFlightLimit::new(tts_max)) }
    }

    /// Offline gateway: mock STT routed through `router`, mock TTS.
    pub fn mock(router: LanguageRouter) -> Self {
        Self::new(Arc::new(MockStt::new(router)), Arc::new(MockTts::new()))
    }

    pub fn transcribe(&self, audio: &AudioBlob) -> Result<Transcript, SpeechError> {
        self.stt_limit.run(|| self.stt.transcribe(audio))
    }

    pub fn synthesize(&self, text: &str, lang: &LangTag) -> Result<AudioBlob, SpeechError> {
        self.tts_limit.run(|| self.tts.synthesize(text, lang))
    }

    pub fn speaks(&self, lang: &LangTag) -> bool {
        self.tts.supports(lang)
    }
}

pub fn select_tts(profiles: &[ProviderProfile]) -> Result<ProviderProfile, SelectionError> {
    select_provider(profiles, Capability::Tts, None)
}
