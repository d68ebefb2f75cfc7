//! State and trend abstraction of raw samples, plus the temporal
//! interpolation that merges adjacent same-valued intervals.
//!
//! All operations here are pure functions over immutable inputs, so
//! independent (subject, concept) streams can be abstracted in parallel.
//! Rate-of-change abstraction is not implemented; it would slot in as an
//! additional [`AbstractionKind`] with its own classifier.

use serde::{Deserialize, Serialize};

use crate::interval::{Interval, Timestamp};
use crate::knowledge::ConceptDefinition;

/// One raw measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub subject_id: String,
    pub concept_id: String,
    pub timestamp: Timestamp,
    pub value: f64,
}

/// The abstraction that produced an interval stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AbstractionKind {
    State,
    Gradient,
}

impl AbstractionKind {
    /// Suffix used when naming fact streams, e.g. `cpu_user_STATE` and
    /// `cpu_user_TREND`.
    pub fn suffix(&self) -> &'static str {
        match self {
            AbstractionKind::State => "STATE",
            AbstractionKind::Gradient => "TREND",
        }
    }
}

pub const INCREASING: &str = "INCREASING";
pub const DECREASING: &str = "DECREASING";
pub const SAME: &str = "SAME";

/// A symbolic interval: one abstraction value holding over `interval`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AbstractInterval {
    pub subject_id: String,
    pub concept_id: String,
    pub kind: AbstractionKind,
    pub symbol: String,
    pub interval: Interval,
}

/// Maps a value to the unique state symbol whose bin contains it.
///
/// Bins are half-open `[lower, upper)`, jointly covering the real line,
/// so every finite value maps to exactly one symbol.
pub fn classify_value(value: f64, def: &ConceptDefinition) -> &str {
    debug_assert!(value.is_finite(), "non-finite values are rejected at ingest");
    def.state_bins
        .iter()
        .find(|bin| bin.lower <= value && value < bin.upper)
        .map(|bin| bin.symbol.as_str())
        .expect("validated state bins cover the real line")
}

/// State abstraction: classify each sample, then interpolate.
///
/// `samples` must share one (subject, concept) and be sorted by timestamp
/// with unique timestamps. Empty input yields an empty stream.
pub fn abstract_state(samples: &[Sample], def: &ConceptDefinition) -> Vec<AbstractInterval> {
    debug_assert!(is_single_sorted_stream(samples));
    let points = samples
        .iter()
        .map(|s| AbstractInterval {
            subject_id: s.subject_id.clone(),
            concept_id: s.concept_id.clone(),
            kind: AbstractionKind::State,
            symbol: classify_value(s.value, def).to_string(),
            interval: Interval::new(s.timestamp, s.timestamp),
        })
        .collect();
    interpolate(points, resolve_max_gap(def, samples))
}

/// Trend abstraction: classify the slope of each consecutive sample pair,
/// then interpolate. Fewer than 2 samples yield an empty stream.
pub fn abstract_gradient(samples: &[Sample], def: &ConceptDefinition) -> Vec<AbstractInterval> {
    debug_assert!(is_single_sorted_stream(samples));
    if samples.len() < 2 {
        return Vec::new();
    }
    let eps = def.gradient_epsilon;
    let segments = samples
        .windows(2)
        .map(|pair| {
            let (a, b) = (&pair[0], &pair[1]);
            let slope = (b.value - a.value) / (b.timestamp - a.timestamp) as f64;
            let symbol = if slope > eps {
                INCREASING
            } else if slope < -eps {
                DECREASING
            } else {
                SAME
            };
            AbstractInterval {
                subject_id: a.subject_id.clone(),
                concept_id: a.concept_id.clone(),
                kind: AbstractionKind::Gradient,
                symbol: symbol.to_string(),
                interval: Interval::new(a.timestamp, b.timestamp),
            }
        })
        .collect();
    interpolate(segments, resolve_max_gap(def, samples))
}

/// Merges adjacent intervals that carry the same symbol and whose gap
/// (`next.start - prev.end`) does not exceed `max_gap`. Works on one
/// (subject, concept, kind) stream sorted by start; a single left-to-right
/// pass reaches the fixpoint because merging never shrinks a gap to the
/// next interval.
pub fn interpolate(intervals: Vec<AbstractInterval>, max_gap: i64) -> Vec<AbstractInterval> {
    let mut merged: Vec<AbstractInterval> = Vec::with_capacity(intervals.len());
    for cur in intervals {
        match merged.last_mut() {
            Some(prev)
                if prev.symbol == cur.symbol
                    && cur.interval.start - prev.interval.end <= max_gap =>
            {
                prev.interval.end = prev.interval.end.max(cur.interval.end);
            }
            _ => merged.push(cur),
        }
    }
    merged
}

/// Effective interpolation gap: the configured value, or twice the median
/// sampling period when the knowledge base leaves it unset.
pub fn resolve_max_gap(def: &ConceptDefinition, samples: &[Sample]) -> i64 {
    if let Some(gap) = def.max_gap_seconds {
        return gap;
    }
    let mut deltas: Vec<i64> = samples
        .windows(2)
        .map(|pair| pair[1].timestamp - pair[0].timestamp)
        .collect();
    if deltas.is_empty() {
        return 1;
    }
    deltas.sort_unstable();
    (2 * deltas[deltas.len() / 2]).max(1)
}

fn is_single_sorted_stream(samples: &[Sample]) -> bool {
    samples.windows(2).all(|pair| {
        pair[0].subject_id == pair[1].subject_id
            && pair[0].concept_id == pair[1].concept_id
            && pair[0].timestamp < pair[1].timestamp
    })
}
