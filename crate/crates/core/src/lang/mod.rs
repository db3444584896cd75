//! Language detection, translation to and from English, and provider selection.
//!
//! Everything downstream of [`LanguageRouter::route_inbound`] works in
//! English; [`LanguageRouter::route_outbound`] maps answers back to the
//! language the question arrived in.

mod select;

pub use select::{
    fixtures, load_profiles, parse_profiles, select_provider, Capability, ProfileError, ProviderProfile,
    SelectionError,
};

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::provider::ProviderError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Script {
    Latin,
    Arabic,
    Gurmukhi,
    Other,
}

impl Script {
    pub fn of(c: char) -> Script {
        match c as u32 {
            0x0041..=0x005A | 0x0061..=0x007A | 0x00C0..=0x024F | 0x1E00..=0x1EFF => Script::Latin,
            0x0600..=0x06FF | 0x0750..=0x077F | 0x08A0..=0x08FF | 0xFB50..=0xFDFF | 0xFE70..=0xFEFF => Script::Arabic,
            0x0A00..=0x0A7F => Script::Gurmukhi,
            _ => Script::Other,
        }
    }
}

/// A detected or declared language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangTag {
    pub code: String,
    pub script: Script,
    pub confidence: f64,
}

impl LangTag {
    /// A declared tag with full confidence; the script follows the code.
    pub fn new(code: impl Into<String>) -> Self {
        let code = code.into().trim().to_ascii_lowercase();
        let script = match code.as_str() {
            "en" => Script::Latin,
            "ur" => Script::Arabic,
            "pa" => Script::Gurmukhi,
            _ => Script::Other,
        };
        Self { code, script, confidence: 1.0 }
    }

    pub fn en() -> Self {
        Self::new("en")
    }

    pub fn ur() -> Self {
        Self::new("ur")
    }

    pub fn pa() -> Self {
        Self::new("pa")
    }

    pub fn is_english(&self) -> bool {
        self.code == "en"
    }

    /// Same language, ignoring script and confidence.
    pub fn same_language(&self, other: &LangTag) -> bool {
        self.code == other.code
    }
}

impl fmt::Display for LangTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code)
    }
}

/// Majority script over letters: Arabic script maps to `ur`, Gurmukhi to
/// `pa`, anything else to `en`. Text without letters is `en` with
/// confidence 0.
pub fn detect_language(text: &str) -> LangTag {
    let mut counts = [0usize; 4];
    let order = [Script::Latin, Script::Arabic, Script::Gurmukhi, Script::Other];
    for c in text.chars().filter(|c| c.is_alphabetic()) {
        let slot = order.iter().position(|s| *s == Script::of(c)).unwrap();
        counts[slot] += 1;
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return LangTag { code: "en".into(), script: Script::Latin, confidence: 0.0 };
    }
    // first maximum wins, so ties favour Latin, then Arabic, then Gurmukhi
    let (slot, &winner) = counts.iter().enumerate().fold((0, &counts[0]), |best, cur| if cur.1 > best.1 { cur } else { best });
    let script = order[slot];
    let code = match script {
        Script::Arabic => "ur",
        Script::Gurmukhi => "pa",
        Script::Latin | Script::Other => "en",
    };
    LangTag { code: code.into(), script, confidence: winner as f64 / total as f64 }
}

/// A pluggable language detector that replaces the script heuristic.
pub trait LanguageDetector: Send + Sync {
    fn name(&self) -> &str;
    fn detect(&self, text: &str) -> Result<LangTag, ProviderError>;
}

pub trait Translator: Send + Sync {
    fn name(&self) -> &str;
    fn translate(&self, text: &str, src: &LangTag, dst: &LangTag) -> Result<String, ProviderError>;
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("translation {src}->{dst} failed: {source}")]
pub struct TranslateError {
    pub src: String,
    pub dst: String,
    #[source]
    pub source: ProviderError,
}

/// Translates through `provider`, returning `text` untouched (and never
/// calling the provider) when source and destination match.
pub fn translate(text: &str, src: &LangTag, dst: &LangTag, provider: &dyn Translator) -> Result<String, TranslateError> {
    if src.same_language(dst) {
        return Ok(text.to_string());
    }
    provider.translate(text, src, dst).map_err(|source| TranslateError {
        src: src.code.clone(),
        dst: dst.code.clone(),
        source,
    })
}

fn dictionary_key(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Offline translator backed by a bidirectional phrase table.
///
/// Each row `src_lang, dst_lang, src_text, dst_text` answers lookups in both
/// directions. Keys compare after whitespace collapsing and lowercasing; the
/// first row wins on conflicts.
#[derive(Debug, Clone, Default)]
pub struct DictionaryTranslator {
    table: HashMap<(String, String, String), String>,
    rows: Vec<DictionaryRow>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DictionaryRow {
    pub src_lang: String,
    pub dst_lang: String,
    pub src_text: String,
    pub dst_text: String,
}

#[derive(Debug, thiserror::Error)]
pub enum DictionaryError {
    #[error("dictionary line {line}: expected 4 tab-separated fields")]
    Malformed { line: usize },
    #[error("dictionary file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl DictionaryTranslator {
    pub const NAME: &'static str = "mock-dictionary";

    pub fn new() -> Self {
        Self::default()
    }

    /// TSV `src_lang\tdst_lang\tsrc_text\tdst_text`; blank lines and `#`
    /// comments skipped.
    pub fn parse(contents: &str) -> Result<Self, DictionaryError> {
        let mut dict = Self::new();
        for (i, line) in contents.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [src_lang, dst_lang, src_text, dst_text] = fields[..] else {
                return Err(DictionaryError::Malformed { line: i + 1 });
            };
            dict.insert(src_lang, dst_lang, src_text, dst_text);
        }
        Ok(dict)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, DictionaryError> {
        let contents = std::fs::read_to_string(path)
            .map_err(|source| DictionaryError::Io { path: path.display().to_string(), source })?;
        Self::parse(&contents)
    }

    /// The phrase table shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(include_str!("../../data/dictionary.tsv")).expect("bundled dictionary parses")
    }

    pub fn insert(&mut self, src_lang: &str, dst_lang: &str, src_text: &str, dst_text: &str) {
        let (sl, dl) = (src_lang.trim().to_ascii_lowercase(), dst_lang.trim().to_ascii_lowercase());
        let (st, dt) = (src_text.trim(), dst_text.trim());
        self.table.entry((sl.clone(), dl.clone(), dictionary_key(st))).or_insert_with(|| dt.to_string());
        self.table.entry((dl.clone(), sl.clone(), dictionary_key(dt))).or_insert_with(|| st.to_string());
        self.rows.push(DictionaryRow { src_lang: sl, dst_lang: dl, src_text: st.into(), dst_text: dt.into() });
    }

    pub fn rows(&self) -> &[DictionaryRow] {
        &self.rows
    }

    pub fn lookup(&self, text: &str, src: &str, dst: &str) -> Option<&str> {
        self.table.get(&(src.to_string(), dst.to_string(), dictionary_key(text))).map(String::as_str)
    }
}

impl Translator for DictionaryTranslator {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn translate(&self, text: &str, src: &LangTag, dst: &LangTag) -> Result<String, ProviderError> {
        self.lookup(text, &src.code, &dst.code)
            .map(str::to_string)
            .ok_or_else(|| ProviderError::new(Self::NAME, format!("no {}->{} entry for `{}`", src.code, dst.code, text.trim())))
    }
}

/// Offline translator that covers any text: ASCII letters and digits are
/// remapped into Arabic (ur) or Gurmukhi (pa) letters and back, losslessly
/// for input that does not already contain those scripts.
/// Output is not real Urdu or Punjabi; it exercises the routing paths with
/// arbitrary content.
#[derive(Debug, Clone, Copy, Default)]
pub struct TransliterationTranslator;

/// Script-specific letter mapping. Urdu uses a contiguous run of Arabic
/// letters for both cases; Gurmukhi has too few letters, so uppercase is the
/// lowercase letter preceded by a nukta.
#[derive(Clone, Copy)]
enum Translit {
    Arabic,
    Gurmukhi,
}

const NUKTA: char = '\u{0A3C}';

fn translit_for(code: &str) -> Option<Translit> {
    match code {
        "ur" => Some(Translit::Arabic),
        "pa" => Some(Translit::Gurmukhi),
        _ => None,
    }
}

fn gurmukhi_letter(i: u32) -> u32 {
    if i < 20 {
        0x0A15 + i
    } else {
        0x0A2A + (i - 20)
    }
}

fn gurmukhi_index(u: u32) -> Option<u32> {
    match u {
        0x0A15..=0x0A28 => Some(u - 0x0A15),
        0x0A2A..=0x0A2F => Some(u - 0x0A2A + 20),
        _ => None,
    }
}

impl TransliterationTranslator {
    pub const NAME: &'static str = "mock-transliteration";

    fn encode(text: &str, t: Translit) -> String {
        let mut out = String::with_capacity(text.len() * 2);
        for c in text.chars() {
            let (u, upper) = match c {
                'a'..='z' => (c as u32 - 'a' as u32, false),
                'A'..='Z' => (c as u32 - 'A' as u32, true),
                '0'..='9' => {
                    let base = match t {
                        Translit::Arabic => 0x06F0,
                        Translit::Gurmukhi => 0x0A66,
                    };
                    out.extend(char::from_u32(base + (c as u32 - '0' as u32)));
                    continue;
                }
                _ => {
                    out.push(c);
                    continue;
                }
            };
            match t {
                Translit::Arabic => out.extend(char::from_u32(if upper { 0x068B + u } else { 0x0671 + u })),
                Translit::Gurmukhi => {
                    if upper {
                        out.push(NUKTA);
                    }
                    out.extend(char::from_u32(gurmukhi_letter(u)));
                }
            }
        }
        out
    }

    fn decode(text: &str, t: Translit) -> String {
        let mut out = String::with_capacity(text.len());
        let mut chars = text.chars().peekable();
        while let Some(c) = chars.next() {
            let u = c as u32;
            match t {
                Translit::Arabic => match u {
                    0x0671..=0x068A => out.extend(char::from_u32('a' as u32 + u - 0x0671)),
                    0x068B..=0x06A4 => out.extend(char::from_u32('A' as u32 + u - 0x068B)),
                    0x06F0..=0x06F9 => out.extend(char::from_u32('0' as u32 + u - 0x06F0)),
                    _ => out.push(c),
                },
                Translit::Gurmukhi => {
                    let next_letter = chars.peek().and_then(|n| gurmukhi_index(*n as u32));
                    if c == NUKTA && next_letter.is_some() {
                        chars.next();
                        out.extend(char::from_u32('A' as u32 + next_letter.unwrap_or(0)));
                    } else if let Some(i) = gurmukhi_index(u) {
                        out.extend(char::from_u32('a' as u32 + i));
                    } else if (0x0A66..=0x0A6F).contains(&u) {
                        out.extend(char::from_u32('0' as u32 + u - 0x0A66));
                    } else {
                        out.push(c);
                    }
                }
            }
        }
        out
    }
}

impl Translator for TransliterationTranslator {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn translate(&self, text: &str, src: &LangTag, dst: &LangTag) -> Result<String, ProviderError> {
        let unsupported = |code: &str| ProviderError::new(Self::NAME, format!("unsupported language `{code}`"));
        match (src.is_english(), dst.is_english()) {
            (true, true) => Ok(text.to_string()),
            (true, false) => Ok(Self::encode(text, translit_for(&dst.code).ok_or_else(|| unsupported(&dst.code))?)),
            (false, true) => Ok(Self::decode(text, translit_for(&src.code).ok_or_else(|| unsupported(&src.code))?)),
            (false, false) => {
                let en = Self::decode(text, translit_for(&src.code).ok_or_else(|| unsupported(&src.code))?);
                Ok(Self::encode(&en, translit_for(&dst.code).ok_or_else(|| unsupported(&dst.code))?))
            }
        }
    }
}

/// Inbound text after routing to English.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutedQuery {
    pub english_text: String,
    pub original_lang: LangTag,
    pub original_text: String,
}

/// A back-translated answer. `degraded` means translation failed and the
/// English text is returned instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutedAnswer {
    pub text: String,
    pub lang: LangTag,
    pub degraded: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RouteError {
    #[error("nothing to route: text is empty")]
    EmptyText,
    #[error("could not route `{original_text}` ({original_lang}) to English: {source}")]
    Translation {
        original_text: String,
        original_lang: LangTag,
        #[source]
        source: TranslateError,
    },
}

/// Wires a translator (and optionally a detector) into the x-to-English
/// inbound path and the English-to-x outbound path.
#[derive(Clone)]
pub struct LanguageRouter {
    translator: Arc<dyn Translator>,
    detector: Option<Arc<dyn LanguageDetector>>,
}

impl fmt::Debug for LanguageRouter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LanguageRouter")
            .field("translator", &self.translator.name())
            .field("detector", &self.detector.as_ref().map(|d| d.name().to_string()))
            .finish()
    }
}

impl LanguageRouter {
    pub fn new(translator: Arc<dyn Translator>) -> Self {
        Self { translator, detector: None }
    }

    pub fn with_detector(mut self, detector: Arc<dyn LanguageDetector>) -> Self {
        self.detector = Some(detector);
        self
    }

    pub fn translator(&self) -> &dyn Translator {
        self.translator.as_ref()
    }

    /// Configured detector if present and successful, else the script heuristic.
    pub fn detect(&self, text: &str) -> LangTag {
        self.detector
            .as_ref()
            .and_then(|d| d.detect(text).ok())
            .unwrap_or_else(|| detect_language(text))
    }

    pub fn route_inbound(&self, text: &str, hint: Option<&LangTag>) -> Result<RoutedQuery, RouteError> {
        if text.trim().is_empty() {
            return Err(RouteError::EmptyText);
        }
        let original_lang = hint.cloned().unwrap_or_else(|| self.detect(text));
        let english_text = translate(text, &original_lang, &LangTag::en(), self.translator.as_ref()).map_err(|source| {
            RouteError::Translation { original_text: text.to_string(), original_lang: original_lang.clone(), source }
        })?;
        if english_text.trim().is_empty() {
            return Err(RouteError::EmptyText);
        }
        Ok(RoutedQuery { english_text, original_lang, original_text: text.to_string() })
    }

    pub fn route_outbound(&self, answer_en: &str, original_lang: &LangTag) -> RoutedAnswer {
        match translate(answer_en, &LangTag::en(), original_lang, self.translator.as_ref()) {
            Ok(text) => RoutedAnswer { text, lang: original_lang.clone(), degraded: false },
            Err(_) => RoutedAnswer { text: answer_en.to_string(), lang: LangTag::en(), degraded: true },
        }
    }
}
