//! CSV ingestion: parsing, validation, de-duplication and the
//! day-of-week filter.
//!
//! Input format: a header line `subject_id,concept_id,timestamp,value`,
//! then one sample per row. Timestamps are either epoch seconds or
//! ISO-8601 (RFC 3339, or a naive `YYYY-MM-DDTHH:MM:SS` /
//! `YYYY-MM-DD HH:MM:SS` read as UTC).

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Datelike, NaiveDateTime, Weekday};

use skymine::abstraction::Sample;
use skymine::knowledge::KnowledgeBase;

use crate::error::CliError;

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct IngestStats {
    pub rows: u64,
    pub kept: u64,
    /// Rows naming a concept the knowledge base does not define.
    pub unknown_concept: u64,
    /// Rows whose (subject, concept, timestamp) repeated; the last wins.
    pub duplicate_timestamp: u64,
    /// Rows with NaN or infinite values.
    pub non_finite: u64,
}

impl IngestStats {
    pub fn has_warnings(&self) -> bool {
        self.unknown_concept > 0 || self.duplicate_timestamp > 0 || self.non_finite > 0
    }
}

#[derive(Debug, Default)]
pub struct Ingested {
    /// Validated samples sorted by (subject, concept, timestamp).
    pub samples: Vec<Sample>,
    pub stats: IngestStats,
}

/// Parses a timestamp field: epoch seconds or ISO-8601.
pub fn parse_timestamp(text: &str) -> Option<i64> {
    let text = text.trim();
    if let Ok(epoch) = text.parse::<i64>() {
        return Some(epoch);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        return Some(dt.timestamp());
    }
    for format in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(text, format) {
            return Some(naive.and_utc().timestamp());
        }
    }
    None
}

/// Reads and validates a sample CSV against the knowledge base.
pub fn ingest_csv(path: &Path, kb: &KnowledgeBase) -> Result<Ingested, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?
        .clone();
    let expected = ["subject_id", "concept_id", "timestamp", "value"];
    let actual: Vec<&str> = headers.iter().map(str::trim).collect();
    if actual != expected {
        return Err(CliError::data(format!(
            "{}: expected header {:?}, found {:?}",
            path.display(),
            expected.join(","),
            actual.join(",")
        )));
    }

    let mut stats = IngestStats::default();
    // Last row wins for duplicate (subject, concept, timestamp) keys.
    let mut dedup: BTreeMap<(String, String, i64), f64> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or_default();
        stats.rows += 1;
        if record.len() != 4 {
            return Err(CliError::data(format!(
                "{} line {line}: expected 4 fields, found {}",
                path.display(),
                record.len()
            )));
        }
        let subject = record[0].trim().to_string();
        let concept = record[1].trim().to_string();
        if subject.is_empty() || concept.is_empty() {
            return Err(CliError::data(format!(
                "{} line {line}: empty subject or concept",
                path.display()
            )));
        }
        let timestamp = parse_timestamp(&record[2]).ok_or_else(|| {
            CliError::data(format!(
                "{} line {line}: unparseable timestamp {:?}",
                path.display(),
                &record[2]
            ))
        })?;
        let value: f64 = record[3].trim().parse().map_err(|_| {
            CliError::data(format!(
                "{} line {line}: unparseable value {:?}",
                path.display(),
                &record[3]
            ))
        })?;
        if kb.concept(&concept).is_none() {
            stats.unknown_concept += 1;
            continue;
        }
        if !value.is_finite() {
            stats.non_finite += 1;
            continue;
        }
        if dedup.insert((subject, concept, timestamp), value).is_some() {
            stats.duplicate_timestamp += 1;
        }
    }

    let samples: Vec<Sample> = dedup
        .into_iter()
        .map(|((subject_id, concept_id, timestamp), value)| Sample {
            subject_id,
            concept_id,
            timestamp,
            value,
        })
        .collect();
    stats.kept = samples.len() as u64;
    Ok(Ingested { samples, stats })
}

/// Keeps only samples falling on a UTC weekday (Monday through Friday).
pub fn filter_weekdays(samples: Vec<Sample>) -> Vec<Sample> {
    samples
        .into_iter()
        .filter(|s| {
            DateTime::from_timestamp(s.timestamp, 0)
                .map(|dt| !matches!(dt.weekday(), Weekday::Sat | Weekday::Sun))
                .unwrap_or(false)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use skymine::knowledge::parse_knowledge_base;
    use std::io::Write;

    fn kb() -> KnowledgeBase {
        parse_knowledge_base(
            r#"
[concepts.cpu]
state_bins = [
  { lower = -inf, upper = 50.0, symbol = "LOW" },
  { lower = 50.0, upper = inf, symbol = "HIGH" },
]
"#,
        )
        .unwrap()
    }

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(content.as_bytes()).unwrap();
        file
    }

    #[test]
    fn timestamp_formats() {
        assert_eq!(parse_timestamp("1616371200"), Some(1_616_371_200));
        assert_eq!(parse_timestamp("2021-03-22T00:00:00Z"), Some(1_616_371_200));
        assert_eq!(parse_timestamp("2021-03-22T00:00:00+02:00"), Some(1_616_364_000));
        assert_eq!(parse_timestamp("2021-03-22T00:00:00"), Some(1_616_371_200));
        assert_eq!(parse_timestamp("2021-03-22 00:00:00"), Some(1_616_371_200));
        assert_eq!(parse_timestamp("soon"), None);
    }

    #[test]
    fn empty_file_is_ok() {
        let file = write_csv("subject_id,concept_id,timestamp,value\n");
        let ingested = ingest_csv(file.path(), &kb()).unwrap();
        assert!(ingested.samples.is_empty());
        assert_eq!(ingested.stats.rows, 0);
    }

    #[test]
    fn unknown_concepts_are_skipped_with_count() {
        let file = write_csv(
            "subject_id,concept_id,timestamp,value\ns1,cpu,100,1.0\ns1,ghost,100,1.0\n",
        );
        let ingested = ingest_csv(file.path(), &kb()).unwrap();
        assert_eq!(ingested.samples.len(), 1);
        assert_eq!(ingested.stats.unknown_concept, 1);
    }

    #[test]
    fn duplicate_timestamps_keep_last_value() {
        let file = write_csv(
            "subject_id,concept_id,timestamp,value\ns1,cpu,100,1.0\ns1,cpu,100,2.0\n",
        );
        let ingested = ingest_csv(file.path(), &kb()).unwrap();
        assert_eq!(ingested.samples.len(), 1);
        assert_eq!(ingested.samples[0].value, 2.0);
        assert_eq!(ingested.stats.duplicate_timestamp, 1);
    }

    #[test]
    fn non_finite_values_are_rejected_with_count() {
        let file = write_csv(
            "subject_id,concept_id,timestamp,value\ns1,cpu,100,NaN\ns1,cpu,160,inf\ns1,cpu,220,3.5\n",
        );
        let ingested = ingest_csv(file.path(), &kb()).unwrap();
        assert_eq!(ingested.samples.len(), 1);
        assert_eq!(ingested.stats.non_finite, 2);
    }

    #[test]
    fn bad_rows_fail_with_line_numbers() {
        let file = write_csv("subject_id,concept_id,timestamp,value\ns1,cpu,nope,1.0\n");
        let err = ingest_csv(file.path(), &kb()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn header_mismatch_is_a_data_error() {
        let file = write_csv("time,value\n1,2\n");
        let err = ingest_csv(file.path(), &kb()).unwrap_err();
        assert!(err.to_string().contains("expected header"));
    }

    #[test]
    fn weekday_filter_drops_weekends() {
        let monday = 1_616_371_200; // 2021-03-22, a Monday
        let saturday = monday + 5 * 86_400;
        let mk = |ts| Sample {
            subject_id: "s".into(),
            concept_id: "cpu".into(),
            timestamp: ts,
            value: 1.0,
        };
        let kept = filter_weekdays(vec![mk(monday), mk(saturday), mk(saturday + 86_400)]);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].timestamp, monday);
    }

    #[test]
    fn samples_come_out_sorted() {
        let file = write_csv(
            "subject_id,concept_id,timestamp,value\ns1,cpu,300,1.0\ns1,cpu,100,1.0\ns1,cpu,200,9.0\n",
        );
        let ingested = ingest_csv(file.path(), &kb()).unwrap();
        let times: Vec<i64> = ingested.samples.iter().map(|s| s.timestamp).collect();
        assert_eq!(times, vec![100, 200, 300]);
    }
}
