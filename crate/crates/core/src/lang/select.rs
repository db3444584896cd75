//! Provider profiles and the budget-filtered selection rule.

use std::cmp::Ordering;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Capability {
    Translate,
    #[serde(rename = "TTS")]
    Tts,
    #[serde(rename = "STT")]
    Stt,
    #[serde(rename = "LLM")]
    Llm,
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Capability::Translate => "Translate",
            Capability::Tts => "TTS",
            Capability::Stt => "STT",
            Capability::Llm => "LLM",
        })
    }
}

impl FromStr for Capability {
    type Err = ProfileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "translate" => Ok(Capability::Translate),
            "tts" => Ok(Capability::Tts),
            "stt" => Ok(Capability::Stt),
            "llm" => Ok(Capability::Llm),
            _ => Err(ProfileError::Invalid(format!("unknown capability `{s}`"))),
        }
    }
}

/// A measured (accuracy, latency, cost) record for one external service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderProfile {
    pub name: String,
    pub capability: Capability,
    /// Percent, 0..=100.
    pub accuracy: f64,
    pub latency_ms: f64,
    /// Cost per call; `None` when the source table reports none.
    pub cost: Option<f64>,
}

impl ProviderProfile {
    pub fn new(name: impl Into<String>, capability: Capability, accuracy: f64, latency_ms: f64, cost: Option<f64>) -> Result<Self, ProfileError> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(ProfileError::Invalid("empty provider name".into()));
        }
        if !(0.0..=100.0).contains(&accuracy) {
            return Err(ProfileError::Invalid(format!("{name}: accuracy {accuracy} outside 0..=100")));
        }
        if !(latency_ms >= 0.0 && latency_ms.is_finite()) {
            return Err(ProfileError::Invalid(format!("{name}: latency {latency_ms} must be >= 0")));
        }
        if cost.is_some_and(|c| !(c >= 0.0 && c.is_finite())) {
            return Err(ProfileError::Invalid(format!("{name}: cost must be >= 0")));
        }
        Ok(Self { name, capability, accuracy, latency_ms, cost })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProfileError {
    #[error("invalid profile: {0}")]
    Invalid(String),
    #[error("profile csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("profile file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Deserialize)]
struct ProfileRow {
    name: String,
    capability: String,
    accuracy: f64,
    latency_ms: f64,
    #[serde(default)]
    cost: Option<f64>,
}

/// Parses CSV with header `name,capability,accuracy,latency_ms,cost`.
/// An empty cost cell means the cost is unknown.
pub fn parse_profiles(reader: impl Read) -> Result<Vec<ProviderProfile>, ProfileError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<ProfileRow>() {
        let row = row?;
        out.push(ProviderProfile::new(row.name, row.capability.parse()?, row.accuracy, row.latency_ms, row.cost)?);
    }
    Ok(out)
}

pub fn load_profiles(path: &Path) -> Result<Vec<ProviderProfile>, ProfileError> {
    let file = std::fs::File::open(path).map_err(|source| ProfileError::Io { path: path.display().to_string(), source })?;
    parse_profiles(file)
}

/// The transcribed comparison tables shipped with the crate.
pub mod fixtures {
    pub const TABLE3: &str = include_str!("../../data/providers/table3.csv");
    pub const TABLE4: &str = include_str!("../../data/providers/table4.csv");
    pub const TABLE5: &str = include_str!("../../data/providers/table5.csv");
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SelectionError {
    #[error("no {capability} provider profiles")]
    NoCandidates { capability: Capability },
    #[error("no {capability} provider within {budget_ms} ms; nearest is {nearest_name} at {nearest_ms} ms")]
    OverBudget { capability: Capability, budget_ms: f64, nearest_name: String, nearest_ms: f64 },
}

fn rank(a: &ProviderProfile, b: &ProviderProfile) -> Ordering {
    // Less means preferred.
    let cost = |p: &ProviderProfile| p.cost.unwrap_or(f64::INFINITY);
    b.accuracy
        .total_cmp(&a.accuracy)
        .then_with(|| a.latency_ms.total_cmp(&b.latency_ms))
        .then_with(|| cost(a).total_cmp(&cost(b)))
        .then_with(|| a.name.cmp(&b.name))
}

/// Among profiles with `capability` whose latency fits the budget, the most
/// accurate; ties go to lower latency, then lower cost, then name.
pub fn select_provider(profiles: &[ProviderProfile], capability: Capability, latency_budget_ms: Option<f64>) -> Result<ProviderProfile, SelectionError> {
    let capable: Vec<&ProviderProfile> = profiles.iter().filter(|p| p.capability == capability).collect();
    if capable.is_empty() {
        return Err(SelectionError::NoCandidates { capability });
    }
    let within = capable.iter().copied().filter(|p| latency_budget_ms.is_none_or(|b| p.latency_ms <= b));
    match within.min_by(|a, b| rank(a, b)) {
        Some(best) => Ok(best.clone()),
        None => {
            let nearest = capable
                .iter()
                .min_by(|a, b| a.latency_ms.total_cmp(&b.latency_ms).then_with(|| a.name.cmp(&b.name)))
                .expect("capable is non-empty");
            Err(SelectionError::OverBudget {
                capability,
                budget_ms: latency_budget_ms.unwrap_or_default(),
                nearest_name: nearest.name.clone(),
                nearest_ms: nearest.latency_ms,
            })
        }
    }
}
