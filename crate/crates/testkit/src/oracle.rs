//! An independently written mining oracle.
//!
//! The oracle enumerates every left-deep pattern shape over the database's
//! fact types and searches its instances directly (depth-first over the
//! item lists), with its own relation classifier and its own support
//! arithmetic. A pattern is reported when it passes the thresholds and its
//! prefix is reported, mirroring the level-wise output contract. None of
//! the production mining code is reused, so agreement between the two is
//! meaningful evidence.

use std::collections::BTreeMap;

use skymine::facts::{Fact, ItemListDB};
use skymine::interval::Interval;
use skymine::mining::{
    CoverageThreshold, MiningConfig, MiningMode, MiningResult, Pattern, PatternInstance, Relation,
};

/// Support statistics the oracle computes for a reported pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleStats {
    pub horizontal: BTreeMap<String, u32>,
    pub vertical: f64,
    pub coverage: BTreeMap<String, i64>,
    pub instances: Vec<PatternInstance>,
}

/// Aggregated relation between two intervals, first operand first.
/// Written as a case split over the classic interval relations: before and
/// meets collapse to BEFORE (subject to the gap bound); equal, starts,
/// finishes and containment in either direction collapse to DURING; only
/// a strict forward overlap remains OVERLAPS.
pub fn reference_relation(first: Interval, second: Interval, max_gap: i64) -> Option<Relation> {
    oracle_relation(first, second, max_gap)
}

fn oracle_relation(first: Interval, second: Interval, max_gap: i64) -> Option<Relation> {
    if second.start >= first.end {
        let gap = second.start - first.end;
        return if gap <= max_gap {
            Some(Relation::Before)
        } else {
            None
        };
    }
    let first_inside = second.start <= first.start && first.end <= second.end;
    let second_inside = first.start <= second.start && second.end <= first.end;
    if first_inside || second_inside {
        return Some(Relation::During);
    }
    if first.start < second.start && second.start < first.end && first.end < second.end {
        return Some(Relation::Overlaps);
    }
    None
}

fn subject_intervals(db: &ItemListDB, fact: &Fact, subject: &str) -> Vec<Interval> {
    db.instances_of(fact)
        .iter()
        .filter(|i| i.subject_id == subject)
        .map(|i| i.interval)
        .collect()
}

/// All binding tuples of `pattern` for one subject, by direct depth-first
/// search. Positions holding the same fact must bind distinct intervals.
fn all_bindings(
    pattern: &Pattern,
    subject: &str,
    db: &ItemListDB,
    cfg: &MiningConfig,
) -> Vec<Vec<Interval>> {
    fn recurse(
        pattern: &Pattern,
        subject: &str,
        db: &ItemListDB,
        cfg: &MiningConfig,
        bindings: &mut Vec<Interval>,
        envelope: Option<Interval>,
        out: &mut Vec<Vec<Interval>>,
    ) {
        let depth = bindings.len();
        if depth == pattern.facts.len() {
            out.push(bindings.clone());
            return;
        }
        let fact = &pattern.facts[depth];
        for candidate in subject_intervals(db, fact, subject) {
            let reused = (0..depth)
                .any(|i| pattern.facts[i] == *fact && bindings[i] == candidate);
            if reused {
                continue;
            }
            let next_envelope = match envelope {
                None => candidate,
                Some(env) => {
                    if oracle_relation(env, candidate, cfg.before_max_gap())
                        != Some(pattern.relations[depth - 1])
                    {
                        continue;
                    }
                    env.envelope_with(&candidate)
                }
            };
            if next_envelope.duration() > cfg.max_window_seconds {
                continue;
            }
            bindings.push(candidate);
            recurse(pattern, subject, db, cfg, bindings, Some(next_envelope), out);
            bindings.pop();
        }
    }

    let mut out = Vec::new();
    recurse(pattern, subject, db, cfg, &mut Vec::new(), None, &mut out);
    out
}

fn envelope_of(bindings: &[Interval]) -> Interval {
    let start = bindings.iter().map(|b| b.start).min().unwrap();
    let end = bindings.iter().map(|b| b.end).max().unwrap();
    Interval::new(start, end)
}

/// The oracle's instance set for a pattern under any mining mode.
///
/// The selection modes are defined per prefix instance, so they are
/// computed by recursing on the prefix and picking one admissible
/// extension for each of its instances.
pub fn oracle_instances(
    pattern: &Pattern,
    db: &ItemListDB,
    cfg: &MiningConfig,
) -> Vec<PatternInstance> {
    let mut instances: Vec<PatternInstance> = match cfg.mode {
        MiningMode::All => db
            .subjects()
            .iter()
            .flat_map(|subject| {
                all_bindings(pattern, subject, db, cfg)
                    .into_iter()
                    .map(move |bindings| PatternInstance {
                        subject_id: subject.clone(),
                        envelope: envelope_of(&bindings),
                        bindings,
                    })
            })
            .collect(),
        MiningMode::MostRecent | MiningMode::Latest => match pattern.prefix() {
            None => db
                .subjects()
                .iter()
                .flat_map(|subject| {
                    subject_intervals(db, &pattern.facts[0], subject)
                        .into_iter()
                        .filter(|iv| iv.duration() <= cfg.max_window_seconds)
                        .map(move |iv| PatternInstance {
                            subject_id: subject.clone(),
                            bindings: vec![iv],
                            envelope: iv,
                        })
                })
                .collect(),
            Some(prefix) => {
                let last_fact = pattern.facts.last().unwrap();
                let declared = *pattern.relations.last().unwrap();
                let mut out = Vec::new();
                for prefix_instance in oracle_instances(&prefix, db, cfg) {
                    let choices = subject_intervals(db, last_fact, &prefix_instance.subject_id)
                        .into_iter()
                        .filter(|candidate| {
                            let reused = (0..prefix.facts.len()).any(|i| {
                                pattern.facts[i] == *last_fact
                                    && prefix_instance.bindings[i] == *candidate
                            });
                            !reused
                                && oracle_relation(
                                    prefix_instance.envelope,
                                    *candidate,
                                    cfg.before_max_gap(),
                                ) == Some(declared)
                                && prefix_instance
                                    .envelope
                                    .envelope_with(candidate)
                                    .duration()
                                    <= cfg.max_window_seconds
                        });
                    let chosen = match cfg.mode {
                        MiningMode::MostRecent => choices.min_by_key(|c| {
                            let distance = match declared {
                                Relation::Before => c.start - prefix_instance.envelope.end,
                                _ => 0,
                            };
                            (distance, c.start, c.end)
                        }),
                        MiningMode::Latest => choices.max_by_key(|c| (c.start, c.end)),
                        MiningMode::All => unreachable!(),
                    };
                    if let Some(atom) = chosen {
                        let mut bindings = prefix_instance.bindings.clone();
                        bindings.push(atom);
                        out.push(PatternInstance {
                            subject_id: prefix_instance.subject_id.clone(),
                            envelope: envelope_of(&bindings),
                            bindings,
                        });
                    }
                }
                out
            }
        },
    };
    instances.sort();
    instances
}

fn coverage_of(instances: &[PatternInstance], subject: &str, cfg: &MiningConfig) -> i64 {
    let envelopes: Vec<Interval> = instances
        .iter()
        .filter(|i| i.subject_id == subject)
        .map(|i| i.envelope)
        .collect();
    match cfg.coverage {
        CoverageThreshold::SumDuration { .. } => {
            envelopes.iter().map(|e| e.end - e.start).sum()
        }
        CoverageThreshold::DistinctDays { .. } => {
            let mut days: Vec<i64> = envelopes.iter().map(|e| e.start.div_euclid(86_400)).collect();
            days.sort_unstable();
            days.dedup();
            days.len() as i64
        }
    }
}

fn coverage_met(cfg: &MiningConfig, coverage: i64) -> bool {
    match cfg.coverage {
        CoverageThreshold::SumDuration { min_seconds } => coverage >= min_seconds,
        CoverageThreshold::DistinctDays { min_days } => coverage >= i64::from(min_days),
    }
}

fn oracle_stats(
    instances: Vec<PatternInstance>,
    db: &ItemListDB,
    cfg: &MiningConfig,
) -> Option<OracleStats> {
    let mut qualifying = 0usize;
    let mut horizontal = BTreeMap::new();
    let mut coverage = BTreeMap::new();
    for subject in db.subjects() {
        let count = instances
            .iter()
            .filter(|i| &i.subject_id == subject)
            .count() as u32;
        let cov = coverage_of(&instances, subject, cfg);
        if count >= cfg.min_horizontal_support && coverage_met(cfg, cov) {
            qualifying += 1;
        }
        if count > 0 {
            horizontal.insert(subject.clone(), count);
            coverage.insert(subject.clone(), cov);
        }
    }
    if qualifying == 0 {
        return None;
    }
    let vertical = qualifying as f64 / db.subject_count() as f64;
    let min_vertical = if db.subject_count() <= 1 {
        0.0
    } else {
        cfg.min_vertical_support
    };
    if vertical < min_vertical {
        return None;
    }
    Some(OracleStats {
        horizontal,
        vertical,
        coverage,
        instances,
    })
}

fn patterns_of_size(facts: &[Fact], size: usize) -> Vec<Pattern> {
    let mut patterns: Vec<Pattern> = facts.iter().cloned().map(Pattern::atom).collect();
    for _ in 1..size {
        patterns = patterns
            .iter()
            .flat_map(|p| {
                facts.iter().flat_map(move |f| {
                    [Relation::Before, Relation::Overlaps, Relation::During]
                        .into_iter()
                        .map(move |rel| p.extend(f.clone(), rel))
                })
            })
            .collect();
    }
    patterns
}

/// Every reported pattern up to `max_size`, with its statistics.
///
/// Mirrors the level-wise output contract: a composite is reported only
/// when it passes the thresholds, its prefix is reported, and its last
/// fact is itself a reported atom (candidates are generated from the
/// size-1 large set).
pub fn oracle_mine(
    db: &ItemListDB,
    cfg: &MiningConfig,
    max_size: usize,
) -> BTreeMap<Pattern, OracleStats> {
    let facts: Vec<Fact> = db.facts().cloned().collect();
    let mut reported: BTreeMap<Pattern, OracleStats> = BTreeMap::new();
    let mut large_atoms: Vec<Fact> = Vec::new();
    for fact in &facts {
        let pattern = Pattern::atom(fact.clone());
        let instances = oracle_instances(&pattern, db, cfg);
        if let Some(stats) = oracle_stats(instances, db, cfg) {
            reported.insert(pattern, stats);
            large_atoms.push(fact.clone());
        }
    }
    for size in 2..=max_size {
        let mut any = false;
        for pattern in patterns_of_size(&large_atoms, size) {
            let prefix = pattern.prefix().expect("size >= 2");
            if !reported.contains_key(&prefix) {
                continue;
            }
            let instances = oracle_instances(&pattern, db, cfg);
            if let Some(stats) = oracle_stats(instances, db, cfg) {
                reported.insert(pattern, stats);
                any = true;
            }
        }
        if !any {
            break;
        }
    }
    reported
}

/// Flattens a [`MiningResult`] into the oracle's map shape so the two can
/// be compared with plain equality.
pub fn flatten_result(result: &MiningResult) -> BTreeMap<Pattern, OracleStats> {
    result
        .all_patterns()
        .map(|mp| {
            (
                mp.pattern.clone(),
                OracleStats {
                    horizontal: mp.horizontal_support.clone(),
                    vertical: mp.vertical_support,
                    coverage: mp.coverage.clone(),
                    instances: mp.instances.clone(),
                },
            )
        })
        .collect()
}

/// Pretty one-line digest used in mismatch diagnostics.
pub fn describe(map: &BTreeMap<Pattern, OracleStats>) -> String {
    map.keys()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(" | ")
}
