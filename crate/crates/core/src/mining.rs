//! Level-wise mining of frequent left-deep temporal patterns.
//!
//! Patterns compose facts with three aggregated interval relations:
//! `BEFORE` (which also covers *meets*), `OVERLAPS`, and `DURING` (which
//! covers *equal*, *starts* and *finishes*, in either containment
//! direction). Each pass extends the large patterns of the previous size
//! by one atomic fact in every relation, then keeps the candidates that
//! satisfy the configured horizontal, vertical and temporal-coverage
//! support thresholds.
//!
//! The relation of an extension is always evaluated between the
//! *envelope* of the prefix instance and the atom's interval, so a
//! composite can sit inside a long fact and vice versa.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::facts::{Fact, FactInstance, ItemListDB};
use crate::interval::Interval;

/// The three aggregated temporal relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Relation {
    Before,
    Overlaps,
    During,
}

pub const ALL_RELATIONS: [Relation; 3] = [Relation::Before, Relation::Overlaps, Relation::During];

impl std::fmt::Display for Relation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Relation::Before => "BEFORE",
            Relation::Overlaps => "OVERLAPS",
            Relation::During => "DURING",
        };
        f.write_str(s)
    }
}

/// A left-deep temporal pattern: `((A1 rel1 A2) rel2 A3) ...`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pattern {
    pub facts: Vec<Fact>,
    pub relations: Vec<Relation>,
}

impl Pattern {
    pub fn atom(fact: Fact) -> Self {
        Self {
            facts: vec![fact],
            relations: Vec::new(),
        }
    }

    /// New pattern with `fact` appended under `relation`.
    pub fn extend(&self, fact: Fact, relation: Relation) -> Self {
        let mut facts = self.facts.clone();
        let mut relations = self.relations.clone();
        facts.push(fact);
        relations.push(relation);
        Self { facts, relations }
    }

    /// Number of atomic facts.
    pub fn size(&self) -> usize {
        self.facts.len()
    }

    pub fn is_well_formed(&self) -> bool {
        !self.facts.is_empty() && self.relations.len() == self.facts.len() - 1
    }

    /// The pattern without its last fact, or `None` for an atom.
    pub fn prefix(&self) -> Option<Pattern> {
        if self.facts.len() <= 1 {
            return None;
        }
        Some(Pattern {
            facts: self.facts[..self.facts.len() - 1].to_vec(),
            relations: self.relations[..self.relations.len() - 1].to_vec(),
        })
    }

    fn truncated(&self, size: usize) -> Pattern {
        Pattern {
            facts: self.facts[..size].to_vec(),
            relations: self.relations[..size - 1].to_vec(),
        }
    }
}

impl std::fmt::Display for Pattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut text = format!("({})", self.facts[0]);
        for (fact, rel) in self.facts[1..].iter().zip(&self.relations) {
            text = format!("({text} {rel} ({fact}))");
        }
        f.write_str(&text)
    }
}

/// A concrete binding of a pattern to intervals of one subject.
///
/// `bindings[i]` is the interval bound to the pattern's i-th fact; the
/// envelope spans them all. The owning pattern is carried by the caller
/// (mining results and match reports group instances per pattern).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatternInstance {
    pub subject_id: String,
    pub bindings: Vec<Interval>,
    pub envelope: Interval,
}

/// How instances sharing an element are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MiningMode {
    /// Every admissible combination.
    All,
    /// Per prefix instance, the atom minimizing the temporal distance.
    #[default]
    MostRecent,
    /// Per prefix instance, the atom with the greatest start.
    Latest,
}

impl std::fmt::Display for MiningMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            MiningMode::All => "all",
            MiningMode::MostRecent => "most-recent",
            MiningMode::Latest => "latest",
        };
        f.write_str(s)
    }
}

/// Units in which temporal coverage is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverageSemantics {
    /// Sum of instance envelope durations, in seconds.
    SumDuration,
    /// Number of distinct UTC calendar days containing an envelope start.
    DistinctDays,
}

/// Per-subject temporal-coverage requirement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "semantics", rename_all = "kebab-case")]
pub enum CoverageThreshold {
    SumDuration { min_seconds: i64 },
    DistinctDays { min_days: u32 },
}

impl CoverageThreshold {
    pub fn semantics(&self) -> CoverageSemantics {
        match self {
            CoverageThreshold::SumDuration { .. } => CoverageSemantics::SumDuration,
            CoverageThreshold::DistinctDays { .. } => CoverageSemantics::DistinctDays,
        }
    }

    pub fn is_met(&self, coverage: i64) -> bool {
        match self {
            CoverageThreshold::SumDuration { min_seconds } => coverage >= *min_seconds,
            CoverageThreshold::DistinctDays { min_days } => coverage >= i64::from(*min_days),
        }
    }
}

/// Mining parameters. Horizontal, vertical and coverage thresholds act as
/// independent per-subject filters; neutral values (1, 0.0, 0) disable
/// them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiningConfig {
    pub mode: MiningMode,
    /// Maximum envelope duration of any reported instance, in seconds.
    pub max_window_seconds: i64,
    /// Maximum gap admitted by the BEFORE relation, in seconds.
    /// `None` admits any gap the window allows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub before_max_gap_seconds: Option<i64>,
    /// Minimum per-subject instance count.
    pub min_horizontal_support: u32,
    /// Minimum fraction of subjects that must qualify. Ignored (treated
    /// as 0) for single-subject databases, where it is meaningless.
    pub min_vertical_support: f64,
    /// Optional cap on the pattern size mined; `None` mines until no
    /// large pattern of the next size exists.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_size: Option<u32>,
    pub coverage: CoverageThreshold,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            mode: MiningMode::MostRecent,
            max_window_seconds: 36_000,
            before_max_gap_seconds: None,
            min_horizontal_support: 1,
            min_vertical_support: 0.0,
            max_size: None,
            coverage: CoverageThreshold::DistinctDays { min_days: 3 },
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("max_window_seconds must be > 0")]
    WindowNotPositive,
    #[error("before_max_gap_seconds must be within [0, max_window_seconds]")]
    BeforeGapOutOfRange,
    #[error("min_horizontal_support must be >= 1")]
    HorizontalSupportZero,
    #[error("min_vertical_support must be within [0, 1]")]
    VerticalSupportOutOfRange,
    #[error("coverage threshold must be non-negative")]
    NegativeCoverage,
}

impl MiningConfig {
    /// Effective BEFORE gap bound: the configured value, or the window.
    pub fn before_max_gap(&self) -> i64 {
        self.before_max_gap_seconds
            .unwrap_or(self.max_window_seconds)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_window_seconds <= 0 {
            return Err(ConfigError::WindowNotPositive);
        }
        if let Some(gap) = self.before_max_gap_seconds {
            if gap < 0 || gap > self.max_window_seconds {
                return Err(ConfigError::BeforeGapOutOfRange);
            }
        }
        if self.min_horizontal_support < 1 {
            return Err(ConfigError::HorizontalSupportZero);
        }
        if !(0.0..=1.0).contains(&self.min_vertical_support) {
            return Err(ConfigError::VerticalSupportOutOfRange);
        }
        let coverage_ok = match self.coverage {
            CoverageThreshold::SumDuration { min_seconds } => min_seconds >= 0,
            CoverageThreshold::DistinctDays { .. } => true,
        };
        if !coverage_ok {
            return Err(ConfigError::NegativeCoverage);
        }
        Ok(())
    }

    fn effective_min_vertical(&self, db: &ItemListDB) -> f64 {
        if db.subject_count() <= 1 {
            0.0
        } else {
            self.min_vertical_support
        }
    }
}

/// Relation between a prefix envelope and an atom interval, if any.
///
/// Checks are prioritized BEFORE, DURING, OVERLAPS so the outcome is
/// unique even for degenerate intervals touching an endpoint (a point
/// sitting exactly on the other operand's boundary reads as BEFORE,
/// not DURING):
/// - `BEFORE` when `0 <= atom.start - prefix.end <= before_max_gap`;
/// - `DURING` when either interval contains the other (inclusive);
/// - `OVERLAPS` when they intersect, neither contains the other, and the
///   prefix starts first.
///
/// Returns `None` when the atom lies (partly) before the prefix or the
/// BEFORE gap is exceeded.
pub fn relation_between(
    prefix_envelope: Interval,
    atom: Interval,
    cfg: &MiningConfig,
) -> Option<Relation> {
    let gap = atom.start - prefix_envelope.end;
    if gap >= 0 {
        return (gap <= cfg.before_max_gap()).then_some(Relation::Before);
    }
    if prefix_envelope.contains(&atom) || atom.contains(&prefix_envelope) {
        return Some(Relation::During);
    }
    if prefix_envelope.intersects(&atom) && prefix_envelope.start < atom.start {
        return Some(Relation::Overlaps);
    }
    None
}

/// Extends every size-(k-1) pattern by every atom under every relation.
/// Output is deduplicated and sorted lexicographically on facts, then
/// relations.
pub fn generate_candidates(large_prev: &[Pattern], atoms: &[Fact]) -> Vec<Pattern> {
    let mut candidates: Vec<Pattern> = large_prev
        .iter()
        .flat_map(|prev| {
            atoms.iter().flat_map(move |atom| {
                ALL_RELATIONS
                    .iter()
                    .map(move |&rel| prev.extend(atom.clone(), rel))
            })
        })
        .collect();
    candidates.sort();
    candidates.dedup();
    candidates
}

/// Size-1 instances of a fact: one per item-list entry whose duration
/// fits the window.
fn atomic_instances(fact: &Fact, db: &ItemListDB, cfg: &MiningConfig) -> Vec<PatternInstance> {
    db.instances_of(fact)
        .iter()
        .filter(|i| i.interval.duration() <= cfg.max_window_seconds)
        .map(|i| PatternInstance {
            subject_id: i.subject_id.clone(),
            bindings: vec![i.interval],
            envelope: i.interval,
        })
        .collect()
}

/// Extends prefix instances of `candidate` by its last fact, applying the
/// declared relation, the window bound and the mining mode.
///
/// Two positions holding the same fact must bind distinct instances, so
/// one occurrence never plays two roles in the same pattern instance.
pub(crate) fn extend_prefix_instances(
    candidate: &Pattern,
    prefix_instances: &[PatternInstance],
    db: &ItemListDB,
    cfg: &MiningConfig,
) -> Vec<PatternInstance> {
    let size = candidate.size();
    let last_fact = &candidate.facts[size - 1];
    let declared = candidate.relations[size - 2];
    let duplicate_positions: Vec<usize> = (0..size - 1)
        .filter(|&i| candidate.facts[i] == *last_fact)
        .collect();
    let atoms = db.instances_of(last_fact);

    let mut out = Vec::new();
    for prefix in prefix_instances {
        let admissible = atoms.iter().filter(|atom| {
            atom.subject_id == prefix.subject_id
                && duplicate_positions
                    .iter()
                    .all(|&i| prefix.bindings[i] != atom.interval)
                && relation_between(prefix.envelope, atom.interval, cfg) == Some(declared)
                && prefix.envelope.envelope_with(&atom.interval).duration()
                    <= cfg.max_window_seconds
        });
        let extend = |atom: &FactInstance| {
            let mut bindings = prefix.bindings.clone();
            bindings.push(atom.interval);
            PatternInstance {
                subject_id: prefix.subject_id.clone(),
                envelope: prefix.envelope.envelope_with(&atom.interval),
                bindings,
            }
        };
        match cfg.mode {
            MiningMode::All => out.extend(admissible.map(extend)),
            MiningMode::MostRecent => {
                // Closest atom: for BEFORE the gap to the prefix envelope,
                // zero for the overlapping relations; ties fall to the
                // earliest atom.
                let best = admissible.min_by_key(|atom| {
                    let distance = match declared {
                        Relation::Before => atom.interval.start - prefix.envelope.end,
                        _ => 0,
                    };
                    (distance, atom.interval.start, atom.interval.end)
                });
                out.extend(best.map(extend));
            }
            MiningMode::Latest => {
                let best =
                    admissible.max_by_key(|atom| (atom.interval.start, atom.interval.end));
                out.extend(best.map(extend));
            }
        }
    }
    out.sort();
    out
}

/// All instances of `candidate`, recomputed from the item lists.
///
/// The same construction backs mining (which memoizes prefix instances
/// per level) and matching, so both report identical instance sets.
pub fn find_instances(
    candidate: &Pattern,
    db: &ItemListDB,
    cfg: &MiningConfig,
) -> Vec<PatternInstance> {
    assert!(candidate.is_well_formed(), "malformed pattern");
    let mut instances = atomic_instances(&candidate.facts[0], db, cfg);
    for size in 2..=candidate.size() {
        if instances.is_empty() {
            return instances;
        }
        instances = extend_prefix_instances(&candidate.truncated(size), &instances, db, cfg);
    }
    instances
}

/// Instance count of one subject.
pub fn horizontal_support(instances: &[PatternInstance], subject: &str) -> u32 {
    instances.iter().filter(|i| i.subject_id == subject).count() as u32
}

/// Fraction of database subjects meeting the per-subject thresholds
/// (horizontal support and temporal coverage).
pub fn vertical_support(instances: &[PatternInstance], db: &ItemListDB, cfg: &MiningConfig) -> f64 {
    if db.subject_count() == 0 {
        return 0.0;
    }
    let qualifying = db
        .subjects()
        .iter()
        .filter(|s| subject_qualifies(instances, s, cfg))
        .count();
    qualifying as f64 / db.subject_count() as f64
}

/// Temporal coverage of one subject's instances: summed envelope seconds,
/// or the number of distinct UTC days containing an envelope start.
pub fn temporal_coverage(
    instances: &[PatternInstance],
    subject: &str,
    semantics: CoverageSemantics,
) -> i64 {
    let envelopes = instances
        .iter()
        .filter(|i| i.subject_id == subject)
        .map(|i| i.envelope);
    match semantics {
        CoverageSemantics::SumDuration => envelopes.map(|e| e.duration()).sum(),
        CoverageSemantics::DistinctDays => {
            let days: std::collections::BTreeSet<i64> =
                envelopes.map(|e| e.start.div_euclid(86_400)).collect();
            days.len() as i64
        }
    }
}

fn subject_qualifies(instances: &[PatternInstance], subject: &str, cfg: &MiningConfig) -> bool {
    horizontal_support(instances, subject) >= cfg.min_horizontal_support
        && cfg
            .coverage
            .is_met(temporal_coverage(instances, subject, cfg.coverage.semantics()))
}

/// A large pattern with its support statistics and instance set.
#[derive(Debug, Clone, PartialEq)]
pub struct MinedPattern {
    pub pattern: Pattern,
    /// Instance count per subject (subjects with at least one instance).
    pub horizontal_support: BTreeMap<String, u32>,
    pub vertical_support: f64,
    /// Temporal coverage per subject, in the configured semantics.
    pub coverage: BTreeMap<String, i64>,
    pub instances: Vec<PatternInstance>,
}

/// Mining output: `levels[k-1]` holds the large patterns of size k,
/// sorted, each with its statistics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MiningResult {
    pub levels: Vec<Vec<MinedPattern>>,
}

impl MiningResult {
    pub fn all_patterns(&self) -> impl Iterator<Item = &MinedPattern> {
        self.levels.iter().flatten()
    }

    pub fn pattern_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }
}

fn evaluate(
    pattern: &Pattern,
    instances: Vec<PatternInstance>,
    db: &ItemListDB,
    cfg: &MiningConfig,
    min_vertical: f64,
) -> Option<MinedPattern> {
    let qualifying = db
        .subjects()
        .iter()
        .filter(|s| subject_qualifies(&instances, s, cfg))
        .count();
    if qualifying == 0 {
        return None;
    }
    let vertical = qualifying as f64 / db.subject_count() as f64;
    if vertical < min_vertical {
        return None;
    }
    let mut horizontal = BTreeMap::new();
    let mut coverage = BTreeMap::new();
    for subject in db.subjects() {
        let h = horizontal_support(&instances, subject);
        if h > 0 {
            horizontal.insert(subject.clone(), h);
            coverage.insert(
                subject.clone(),
                temporal_coverage(&instances, subject, cfg.coverage.semantics()),
            );
        }
    }
    Some(MinedPattern {
        pattern: pattern.clone(),
        horizontal_support: horizontal,
        vertical_support: vertical,
        coverage,
        instances,
    })
}

/// Mines all large patterns level by level.
///
/// Level 1 is the frequent atomic facts; each further level extends the
/// previous one via [`generate_candidates`] and keeps the candidates that
/// pass every threshold. Mining stops when a level comes up empty or the
/// configured `max_size` is reached. Candidate evaluation runs in
/// parallel; results are order-normalized so the output is deterministic.
pub fn mine(db: &ItemListDB, cfg: &MiningConfig) -> Result<MiningResult, ConfigError> {
    cfg.validate()?;
    let mut result = MiningResult::default();
    if db.is_empty() || cfg.max_size == Some(0) {
        return Ok(result);
    }
    let min_vertical = cfg.effective_min_vertical(db);

    let atoms: Vec<Fact> = db.facts().cloned().collect();
    let level1: Vec<MinedPattern> = atoms
        .par_iter()
        .filter_map(|fact| {
            let pattern = Pattern::atom(fact.clone());
            let instances = atomic_instances(fact, db, cfg);
            evaluate(&pattern, instances, db, cfg, min_vertical)
        })
        .collect();
    if level1.is_empty() {
        return Ok(result);
    }
    let large_atoms: Vec<Fact> = level1
        .iter()
        .map(|mp| mp.pattern.facts[0].clone())
        .collect();
    result.levels.push(level1);

    loop {
        let prev = result.levels.last().expect("at least level 1");
        if cfg
            .max_size
            .is_some_and(|max| result.levels.len() as u32 >= max)
        {
            break;
        }
        let prev_patterns: Vec<Pattern> = prev.iter().map(|mp| mp.pattern.clone()).collect();
        let prefix_instances: BTreeMap<&Pattern, &Vec<PatternInstance>> = prev
            .iter()
            .map(|mp| (&mp.pattern, &mp.instances))
            .collect();
        let candidates = generate_candidates(&prev_patterns, &large_atoms);
        let mut next: Vec<MinedPattern> = candidates
            .par_iter()
            .filter_map(|candidate| {
                let prefix = candidate.prefix().expect("candidates have size >= 2");
                let prefix_instances = prefix_instances
                    .get(&prefix)
                    .expect("candidate generated from a large prefix");
                let instances = extend_prefix_instances(candidate, prefix_instances, db, cfg);
                evaluate(candidate, instances, db, cfg, min_vertical)
            })
            .collect();
        next.sort_by(|a, b| a.pattern.cmp(&b.pattern));
        if next.is_empty() {
            break;
        }
        result.levels.push(next);
    }
    Ok(result)
}
