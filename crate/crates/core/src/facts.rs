//! Duration discretization and the item-list database the miner consumes.
//!
//! Every abstract interval becomes a [`FactInstance`] whose [`Fact`] triplet
//! combines the stream name (`<concept>_<KIND>`), the symbolic value and
//! the discretized duration class. Instances are grouped per fact into
//! sorted item lists; the resulting [`ItemListDB`] is immutable and can be
//! shared freely.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::abstraction::AbstractInterval;
use crate::interval::Interval;
use crate::knowledge::DurationClassification;

/// The miner's alphabet: (stream name, symbolic value, duration class).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub concept_name: String,
    pub value: String,
    pub duration_class: String,
}

impl Fact {
    pub fn new(concept_name: &str, value: &str, duration_class: &str) -> Self {
        Self {
            concept_name: concept_name.to_string(),
            value: value.to_string(),
            duration_class: duration_class.to_string(),
        }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}[{}]", self.concept_name, self.value, self.duration_class)
    }
}

// Facts serialize as a compact 3-element array so that configuration and
// library files stay readable: ["cpu_STATE", "HIGH", "SHORT"].
impl Serialize for Fact {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeTuple;
        let mut t = serializer.serialize_tuple(3)?;
        t.serialize_element(&self.concept_name)?;
        t.serialize_element(&self.value)?;
        t.serialize_element(&self.duration_class)?;
        t.end()
    }
}

impl<'de> Deserialize<'de> for Fact {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let (concept_name, value, duration_class) =
            <(String, String, String)>::deserialize(deserializer)?;
        Ok(Fact {
            concept_name,
            value,
            duration_class,
        })
    }
}

/// A fact placed on a subject's timeline.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FactInstance {
    pub fact: Fact,
    pub subject_id: String,
    pub interval: Interval,
}

/// Item-list database: per fact, the sorted list of its instances.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ItemListDB {
    lists: BTreeMap<Fact, Vec<FactInstance>>,
    subjects: BTreeSet<String>,
    time_extent: BTreeMap<String, Interval>,
}

/// Maps a duration to the first class whose upper bound is >= `d`.
/// Bounds are inclusive on the upper side, so a 60s interval still counts
/// as SHORT under a `SHORT <= 60s` configuration.
pub fn classify_duration(d: i64, classes: &DurationClassification) -> &str {
    assert!(d >= 0, "durations are non-negative");
    classes
        .classes
        .iter()
        .find(|c| c.max_seconds.is_none_or(|max| d <= max))
        .map(|c| c.symbol.as_str())
        .expect("validated classes end with an unbounded one")
}

/// Builds the item-list database from abstraction output.
///
/// Each abstract interval becomes exactly one instance; construction is
/// deterministic and insensitive to the order of the input.
pub fn build_item_lists(
    abstractions: &[AbstractInterval],
    classes: &DurationClassification,
) -> ItemListDB {
    let instances = abstractions.iter().map(|a| FactInstance {
        fact: Fact {
            concept_name: format!("{}_{}", a.concept_id, a.kind.suffix()),
            value: a.symbol.clone(),
            duration_class: classify_duration(a.interval.duration(), classes).to_string(),
        },
        subject_id: a.subject_id.clone(),
        interval: a.interval,
    });
    ItemListDB::from_instances(instances.collect())
}

impl ItemListDB {
    /// Groups, sorts and deduplicates instances into item lists.
    pub fn from_instances(instances: Vec<FactInstance>) -> Self {
        let mut db = ItemListDB::default();
        for instance in instances {
            db.subjects.insert(instance.subject_id.clone());
            db.time_extent
                .entry(instance.subject_id.clone())
                .and_modify(|extent| *extent = extent.envelope_with(&instance.interval))
                .or_insert(instance.interval);
            db.lists
                .entry(instance.fact.clone())
                .or_default()
                .push(instance);
        }
        for list in db.lists.values_mut() {
            list.sort_by(|a, b| {
                (&a.subject_id, a.interval).cmp(&(&b.subject_id, b.interval))
            });
            list.dedup();
        }
        db
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    /// Total number of instances across all item lists.
    pub fn len(&self) -> usize {
        self.lists.values().map(Vec::len).sum()
    }

    pub fn facts(&self) -> impl Iterator<Item = &Fact> {
        self.lists.keys()
    }

    pub fn contains_fact(&self, fact: &Fact) -> bool {
        self.lists.contains_key(fact)
    }

    pub fn instances_of(&self, fact: &Fact) -> &[FactInstance] {
        self.lists.get(fact).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn all_instances(&self) -> impl Iterator<Item = &FactInstance> {
        self.lists.values().flatten()
    }

    pub fn subjects(&self) -> &BTreeSet<String> {
        &self.subjects
    }

    pub fn subject_count(&self) -> usize {
        self.subjects.len()
    }

    pub fn time_extent(&self, subject: &str) -> Option<Interval> {
        self.time_extent.get(subject).copied()
    }

    /// Overall extent across all subjects, if any instance exists.
    pub fn full_extent(&self) -> Option<Interval> {
        self.time_extent
            .values()
            .copied()
            .reduce(|a, b| a.envelope_with(&b))
    }

    /// Writes the database as tab-separated text, one instance per line:
    /// `concept  value  duration_class  subject  start  end`, sorted.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "concept\tvalue\tduration_class\tsubject\tstart\tend")?;
        for (fact, list) in &self.lists {
            for instance in list {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    fact.concept_name,
                    fact.value,
                    fact.duration_class,
                    instance.subject_id,
                    instance.interval.start,
                    instance.interval.end
                )?;
            }
        }
        Ok(())
    }

    /// Reads a database previously written by [`ItemListDB::write_tsv`].
    pub fn read_tsv<R: BufRead>(input: R) -> Result<Self, FactFileError> {
        let mut instances = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            if line_no == 1 {
                if line != "concept\tvalue\tduration_class\tsubject\tstart\tend" {
                    return Err(FactFileError::Header);
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 6 {
                return Err(FactFileError::Malformed { line: line_no });
            }
            let start = fields[4]
                .parse()
                .map_err(|_| FactFileError::Malformed { line: line_no })?;
            let end = fields[5]
                .parse()
                .map_err(|_| FactFileError::Malformed { line: line_no })?;
            if start > end {
                return Err(FactFileError::Malformed { line: line_no });
            }
            instances.push(FactInstance {
                fact: Fact::new(fields[0], fields[1], fields[2]),
                subject_id: fields[3].to_string(),
                interval: Interval::new(start, end),
            });
        }
        Ok(ItemListDB::from_instances(instances))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FactFileError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unrecognized fact file header")]
    Header,
    #[error("malformed fact file line {line}")]
    Malformed { line: usize },
}
