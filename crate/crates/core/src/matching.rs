//! Finds all instances of a pattern library in an item-list database.
//!
//! Matching shares its instance construction with the miner
//! ([`crate::mining::find_instances`]), so matching a mined pattern on its
//! own training data reproduces the miner's instance set exactly. Anomaly
//! scoring normally matches in ALL mode regardless of the mining mode, so
//! the skyline sees every occurrence; callers can override via the config.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::facts::{Fact, ItemListDB};
use crate::interval::Interval;
use crate::mining::{find_instances, MiningConfig, Pattern, PatternInstance};

/// All instances of one library pattern. `pattern_id` is the pattern's
/// position in the matched library.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedPattern {
    pub pattern_id: usize,
    pub pattern: Pattern,
    pub instances: Vec<PatternInstance>,
}

/// Matching output, plus the library facts that do not exist in the
/// database at all (those patterns trivially yield zero instances).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchReport {
    pub matches: Vec<MatchedPattern>,
    pub unknown_facts: Vec<Fact>,
}

impl MatchReport {
    pub fn instance_count(&self) -> usize {
        self.matches.iter().map(|m| m.instances.len()).sum()
    }

    /// (pattern id, envelope, subject) triple per instance, the shape the
    /// skyline consumes.
    pub fn envelopes(&self) -> impl Iterator<Item = (usize, Interval, &str)> {
        self.matches.iter().flat_map(|m| {
            m.instances
                .iter()
                .map(move |i| (m.pattern_id, i.envelope, i.subject_id.as_str()))
        })
    }
}

/// Matches every library pattern against the database under `cfg`.
/// Patterns are processed in parallel; output order follows the library.
pub fn match_patterns(library: &[Pattern], db: &ItemListDB, cfg: &MiningConfig) -> MatchReport {
    let matches: Vec<MatchedPattern> = library
        .par_iter()
        .enumerate()
        .map(|(pattern_id, pattern)| MatchedPattern {
            pattern_id,
            pattern: pattern.clone(),
            instances: find_instances(pattern, db, cfg),
        })
        .collect();
    let mut unknown_facts: Vec<Fact> = library
        .iter()
        .flat_map(|p| p.facts.iter())
        .filter(|f| !db.contains_fact(f))
        .cloned()
        .collect();
    unknown_facts.sort();
    unknown_facts.dedup();
    MatchReport {
        matches,
        unknown_facts,
    }
}

/// Writes matched instances as tab-separated text, one instance per line:
/// `pattern_id  subject  envelope_start  envelope_end  bindings`, where
/// bindings are `start..end` pairs joined by `;`.
pub fn write_instances_tsv<W: Write>(report: &MatchReport, mut out: W) -> std::io::Result<()> {
    writeln!(out, "pattern_id\tsubject\tenvelope_start\tenvelope_end\tbindings")?;
    for matched in &report.matches {
        for instance in &matched.instances {
            let bindings = instance
                .bindings
                .iter()
                .map(|b| format!("{}..{}", b.start, b.end))
                .collect::<Vec<_>>()
                .join(";");
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                matched.pattern_id,
                instance.subject_id,
                instance.envelope.start,
                instance.envelope.end,
                bindings
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum InstanceFileError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed instance file line {line}")]
    Malformed { line: usize },
}

/// Reads instances written by [`write_instances_tsv`] as flat
/// `(pattern_id, subject, envelope)` rows.
pub fn read_instances_tsv<R: BufRead>(
    input: R,
) -> Result<Vec<(usize, String, Interval)>, InstanceFileError> {
    let mut rows = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line_no == 1 || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(InstanceFileError::Malformed { line: line_no });
        }
        let parse = |s: &str| s.parse::<i64>().map_err(|_| InstanceFileError::Malformed { line: line_no });
        let id = fields[0]
            .parse::<usize>()
            .map_err(|_| InstanceFileError::Malformed { line: line_no })?;
        rows.push((
            id,
            fields[1].to_string(),
            Interval::new(parse(fields[2])?, parse(fields[3])?),
        ));
    }
    Ok(rows)
}
