//! The pattern-library file: mined patterns with their support statistics
//! and the mining parameters that produced them, serialized as TOML.
//!
//! Entry ids are assigned by position (sorted by size, then pattern), so
//! identical mining runs always produce byte-identical files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::facts::Fact;
use crate::mining::{MiningConfig, MiningResult, Pattern, Relation};

pub const LIBRARY_SCHEMA: &str = "skymine/library-v1";

/// One library pattern with the statistics recorded at mining time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LibraryEntry {
    pub id: usize,
    pub vertical_support: f64,
    pub facts: Vec<Fact>,
    pub relations: Vec<Relation>,
    #[serde(default)]
    pub horizontal_support: BTreeMap<String, u32>,
    #[serde(default)]
    pub coverage: BTreeMap<String, i64>,
}

impl LibraryEntry {
    pub fn pattern(&self) -> Pattern {
        Pattern {
            facts: self.facts.clone(),
            relations: self.relations.clone(),
        }
    }

    pub fn size(&self) -> usize {
        self.facts.len()
    }
}

/// A persisted pattern library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternLibrary {
    pub schema: String,
    pub mining: MiningConfig,
    #[serde(default)]
    pub patterns: Vec<LibraryEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum LibraryError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("library parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported library schema {found:?} (expected {LIBRARY_SCHEMA:?})")]
    Schema { found: String },
    #[error("malformed library entry {id}: relation count does not match fact count")]
    MalformedEntry { id: usize },
}

impl PatternLibrary {
    /// Builds a library from mined patterns, keeping only the selected
    /// ones. Ids are assigned in (size, pattern) order.
    pub fn from_mining_result<F>(result: &MiningResult, cfg: &MiningConfig, keep: F) -> Self
    where
        F: Fn(&crate::mining::MinedPattern) -> bool,
    {
        let mut patterns = Vec::new();
        for level in &result.levels {
            for mined in level {
                if !keep(mined) {
                    continue;
                }
                patterns.push(LibraryEntry {
                    id: patterns.len(),
                    vertical_support: mined.vertical_support,
                    facts: mined.pattern.facts.clone(),
                    relations: mined.pattern.relations.clone(),
                    horizontal_support: mined.horizontal_support.clone(),
                    coverage: mined.coverage.clone(),
                });
            }
        }
        Self {
            schema: LIBRARY_SCHEMA.to_string(),
            mining: cfg.clone(),
            patterns,
        }
    }

    pub fn patterns(&self) -> Vec<Pattern> {
        self.patterns.iter().map(LibraryEntry::pattern).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("library serializes")
    }

    pub fn parse(text: &str) -> Result<Self, LibraryError> {
        let library: PatternLibrary = toml::from_str(text)?;
        if library.schema != LIBRARY_SCHEMA {
            return Err(LibraryError::Schema {
                found: library.schema,
            });
        }
        for entry in &library.patterns {
            if entry.facts.is_empty() || entry.relations.len() != entry.facts.len() - 1 {
                return Err(LibraryError::MalformedEntry { id: entry.id });
            }
        }
        Ok(library)
    }

    pub fn load(path: &Path) -> Result<Self, LibraryError> {
        let text = std::fs::read_to_string(path).map_err(|source| LibraryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facts::{FactInstance, ItemListDB};
    use crate::interval::Interval;
    use crate::mining::{mine, CoverageThreshold, MiningMode};

    fn small_result() -> (MiningResult, MiningConfig) {
        let a = Fact::new("cpu_STATE", "HIGH", "SHORT");
        let b = Fact::new("mem_STATE", "LOW", "SHORT");
        let mk = |fact: &Fact, start: i64| FactInstance {
            fact: fact.clone(),
            subject_id: "s1".into(),
            interval: Interval::new(start, start + 10),
        };
        let db = ItemListDB::from_instances(vec![
            mk(&a, 0),
            mk(&b, 20),
            mk(&a, 100),
            mk(&b, 120),
        ]);
        let cfg = MiningConfig {
            mode: MiningMode::All,
            max_window_seconds: 50,
            before_max_gap_seconds: Some(50),
            min_horizontal_support: 1,
            min_vertical_support: 0.0,
            max_size: Some(2),
            coverage: CoverageThreshold::SumDuration { min_seconds: 0 },
        };
        (mine(&db, &cfg).unwrap(), cfg)
    }

    #[test]
    fn round_trip_preserves_entries() {
        let (result, cfg) = small_result();
        let library = PatternLibrary::from_mining_result(&result, &cfg, |_| true);
        assert!(!library.is_empty());
        let reloaded = PatternLibrary::parse(&library.to_toml()).unwrap();
        assert_eq!(library, reloaded);
        assert_eq!(library.to_toml(), reloaded.to_toml());
    }

    #[test]
    fn selection_filter_applies() {
        let (result, cfg) = small_result();
        let library = PatternLibrary::from_mining_result(&result, &cfg, |mp| mp.pattern.size() == 2);
        assert!(library.patterns.iter().all(|e| e.size() == 2));
        assert!(!library.is_empty());
        let ids: Vec<usize> = library.patterns.iter().map(|e| e.id).collect();
        assert_eq!(ids, (0..library.len()).collect::<Vec<_>>());
    }

    #[test]
    fn schema_mismatch_rejected() {
        let (result, cfg) = small_result();
        let mut library = PatternLibrary::from_mining_result(&result, &cfg, |_| true);
        library.schema = "something/else".into();
        let err = PatternLibrary::parse(&library.to_toml()).unwrap_err();
        assert!(matches!(err, LibraryError::Schema { .. }));
    }
}
