//! The domain knowledge the pipeline needs: per-concept state bins,
//! gradient thresholds, interpolation gaps, duration classes, the promoted
//! pattern library and skyline settings.
//!
//! Everything is loaded from a single human-editable TOML file and is
//! immutable afterwards, so a [`KnowledgeBase`] can be shared read-only
//! across worker threads. See `docs/FORMATS.md` for the full key set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::mining::{MiningConfig, Pattern};
use crate::skyline::SkylineConfig;

/// Symbols produced by the trend (gradient) abstraction.
pub const GRADIENT_SYMBOLS: [&str; 3] = ["INCREASING", "DECREASING", "SAME"];

/// One state bin `[lower, upper) -> symbol`.
///
/// Bins are half-open so that classification is total and unambiguous at
/// the boundaries. The first bin of a concept is open below
/// (`lower = -inf`) and the last is open above (`upper = +inf`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateBin {
    pub lower: f64,
    pub upper: f64,
    pub symbol: String,
}

/// Per-concept abstraction knowledge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConceptDefinition {
    /// Slope magnitude (value per second) below which a trend counts as
    /// unchanged.
    #[serde(default)]
    pub gradient_epsilon: f64,
    /// Maximum gap bridged when merging same-symbol intervals. `None`
    /// derives the gap from the data as twice the median sampling period.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_gap_seconds: Option<i64>,
    pub state_bins: Vec<StateBin>,
}

impl ConceptDefinition {
    pub fn state_symbols(&self) -> impl Iterator<Item = &str> {
        self.state_bins.iter().map(|b| b.symbol.as_str())
    }
}

/// One duration class. `max_seconds` is the inclusive upper bound;
/// `None` marks the final unbounded class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DurationClass {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_seconds: Option<i64>,
    pub symbol: String,
}

/// Ordered duration classes covering `[0, +inf)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DurationClassification {
    pub classes: Vec<DurationClass>,
}

impl DurationClassification {
    /// VERY-SHORT <= 10s < SHORT <= 60s < MEDIUM <= 15min < LONG <= 1h < VERY-LONG.
    ///
    /// The 60s and 15min boundaries are the conventional defaults; the
    /// 10s and 1h ones extend them to five classes and can be overridden
    /// in the configuration file.
    pub fn default_five_class() -> Self {
        let class = |max: Option<i64>, symbol: &str| DurationClass {
            max_seconds: max,
            symbol: symbol.to_string(),
        };
        Self {
            classes: vec![
                class(Some(10), "VERY-SHORT"),
                class(Some(60), "SHORT"),
                class(Some(900), "MEDIUM"),
                class(Some(3600), "LONG"),
                class(None, "VERY-LONG"),
            ],
        }
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.classes.iter().map(|c| c.symbol.as_str())
    }
}

impl Default for DurationClassification {
    fn default() -> Self {
        Self::default_five_class()
    }
}

/// The validated, immutable knowledge base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeBase {
    pub concepts: BTreeMap<String, ConceptDefinition>,
    #[serde(default)]
    pub duration_classes: DurationClassification,
    /// Normal-behavior patterns promoted into the knowledge base.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pattern_library: Vec<Pattern>,
    #[serde(default)]
    pub skyline: SkylineConfig,
    /// Default mining parameters, overridable from the command line.
    #[serde(default)]
    pub mining: MiningConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum KbError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid knowledge base: {0}")]
    Validation(String),
}

/// A pattern-library entry that references unknown knowledge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LibraryViolation {
    pub pattern_index: usize,
    pub message: String,
}

impl fmt::Display for LibraryViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pattern {}: {}", self.pattern_index, self.message)
    }
}

/// Loads and validates a knowledge base from a TOML file.
pub fn load_knowledge_base(path: &Path) -> Result<KnowledgeBase, KbError> {
    let text = std::fs::read_to_string(path).map_err(|source| KbError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_knowledge_base(&text)
}

/// Parses and validates a knowledge base from TOML text.
pub fn parse_knowledge_base(text: &str) -> Result<KnowledgeBase, KbError> {
    let kb: KnowledgeBase = toml::from_str(text)?;
    kb.validate()?;
    Ok(kb)
}

fn valid_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

impl KnowledgeBase {
    /// Checks every structural invariant, naming the violated one.
    pub fn validate(&self) -> Result<(), KbError> {
        for (id, def) in &self.concepts {
            validate_concept(id, def)?;
        }
        validate_duration_classes(&self.duration_classes)?;
        self.skyline
            .validate()
            .map_err(|e| KbError::Validation(e.to_string()))?;
        self.mining
            .validate()
            .map_err(|e| KbError::Validation(e.to_string()))?;
        let violations = self.validate_pattern_library();
        if let Some(v) = violations.first() {
            return Err(KbError::Validation(v.to_string()));
        }
        Ok(())
    }

    pub fn concept(&self, id: &str) -> Option<&ConceptDefinition> {
        self.concepts.get(id)
    }

    /// Checks that every pattern-library fact references a known concept,
    /// a known symbol and a known duration class. Violations are returned,
    /// not thrown; an empty list means the library is consistent.
    pub fn validate_pattern_library(&self) -> Vec<LibraryViolation> {
        let duration_symbols: BTreeSet<&str> = self.duration_classes.symbols().collect();
        let mut violations = Vec::new();
        let mut push = |idx: usize, message: String| {
            violations.push(LibraryViolation {
                pattern_index: idx,
                message,
            })
        };
        for (idx, pattern) in self.pattern_library.iter().enumerate() {
            if !pattern.is_well_formed() {
                push(idx, "malformed pattern (relation count mismatch)".into());
                continue;
            }
            for fact in &pattern.facts {
                let Some((concept_id, kind)) = fact.concept_name.rsplit_once('_') else {
                    push(
                        idx,
                        format!("fact name {:?} lacks a _STATE/_TREND suffix", fact.concept_name),
                    );
                    continue;
                };
                let Some(def) = self.concepts.get(concept_id) else {
                    push(idx, format!("references undefined concept {concept_id:?}"));
                    continue;
                };
                match kind {
                    "STATE" => {
                        if !def.state_symbols().any(|s| s == fact.value) {
                            push(
                                idx,
                                format!(
                                    "value {:?} is not a state symbol of concept {concept_id:?}",
                                    fact.value
                                ),
                            );
                        }
                    }
                    "TREND" => {
                        if !GRADIENT_SYMBOLS.contains(&fact.value.as_str()) {
                            push(
                                idx,
                                format!("value {:?} is not a trend symbol", fact.value),
                            );
                        }
                    }
                    other => {
                        push(idx, format!("unknown abstraction kind suffix {other:?}"));
                    }
                }
                if !duration_symbols.contains(fact.duration_class.as_str()) {
                    push(
                        idx,
                        format!("unknown duration class {:?}", fact.duration_class),
                    );
                }
            }
        }
        violations
    }

    /// Serializes the knowledge base back to TOML. Loading the output
    /// yields an equal knowledge base.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("knowledge base serializes")
    }
}

fn validate_concept(id: &str, def: &ConceptDefinition) -> Result<(), KbError> {
    let err = |msg: String| Err(KbError::Validation(format!("concept {id:?}: {msg}")));
    if !valid_identifier(id) {
        return err("concept id contains invalid characters".into());
    }
    if def.state_bins.is_empty() {
        return err("no state bins".into());
    }
    if !(def.gradient_epsilon.is_finite() && def.gradient_epsilon >= 0.0) {
        return err("gradient_epsilon must be finite and >= 0".into());
    }
    if let Some(gap) = def.max_gap_seconds {
        if gap <= 0 {
            return err("max_gap_seconds must be > 0".into());
        }
    }
    let bins = &def.state_bins;
    if bins[0].lower != f64::NEG_INFINITY {
        return err("state bins must start at -inf".into());
    }
    if bins[bins.len() - 1].upper != f64::INFINITY {
        return err("state bins must end at +inf".into());
    }
    let mut symbols = BTreeSet::new();
    for bin in bins {
        if !valid_identifier(&bin.symbol) {
            return err(format!("state symbol {:?} contains invalid characters", bin.symbol));
        }
        if bin.lower >= bin.upper {
            return err(format!("empty state bin {:?}", bin.symbol));
        }
        if !symbols.insert(bin.symbol.as_str()) {
            return err(format!("duplicate state symbol {:?}", bin.symbol));
        }
    }
    for pair in bins.windows(2) {
        if pair[1].lower < pair[0].upper {
            return err("overlapping state bins".into());
        }
        if pair[1].lower > pair[0].upper {
            return err("gap between state bins".into());
        }
    }
    Ok(())
}

fn validate_duration_classes(classes: &DurationClassification) -> Result<(), KbError> {
    let err = |msg: &str| Err(KbError::Validation(format!("duration classes: {msg}")));
    let classes = &classes.classes;
    if classes.len() < 2 {
        return err("at least 2 duration classes required");
    }
    let mut symbols = BTreeSet::new();
    for class in classes {
        if !valid_identifier(&class.symbol) {
            return err("class symbol contains invalid characters");
        }
        if !symbols.insert(class.symbol.as_str()) {
            return err("duplicate duration class symbol");
        }
    }
    let (last, bounded) = classes.split_last().expect("len >= 2");
    if last.max_seconds.is_some() {
        return err("final class must be unbounded");
    }
    let mut prev: Option<i64> = None;
    for class in bounded {
        let Some(max) = class.max_seconds else {
            return err("only the final class may be unbounded");
        };
        if max < 0 {
            return err("class bounds must be non-negative");
        }
        if let Some(p) = prev {
            if max <= p {
                return err("class bounds must be strictly increasing");
            }
        }
        prev = Some(max);
    }
    Ok(())
}
