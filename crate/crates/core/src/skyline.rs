//! The skyline abstraction: label each stretch of the timeline FEW,
//! MEDIUM or MANY by the fraction of library patterns present, and report
//! FEW stretches as anomaly candidates.
//!
//! The timeline is cut into consecutive bins; a pattern is present in a
//! bin when at least one of its instance envelopes intersects it. The FEW
//! boundary is strict (`fraction < few_threshold`) and the MANY boundary
//! inclusive (`fraction >= many_threshold`). Adjacent same-label bins are
//! merged into maximal intervals that tile the timeline (each interval's
//! end is the next one's start).

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::interval::Interval;

/// What a bin counts when computing its fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CountBasis {
    /// Distinct library patterns with at least one instance in the bin.
    #[default]
    PatternTypes,
    /// Raw instance count (capped at the library size).
    InstanceCount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkylineConfig {
    pub bin_seconds: i64,
    /// Fractions strictly below this are FEW.
    pub few_threshold: f64,
    /// Fractions at or above this are MANY.
    pub many_threshold: f64,
    /// FEW intervals shorter than this are not reported as anomalies.
    pub min_anomaly_duration_seconds: i64,
    pub count_basis: CountBasis,
}

impl Default for SkylineConfig {
    fn default() -> Self {
        Self {
            bin_seconds: 3600,
            few_threshold: 0.10,
            many_threshold: 0.30,
            min_anomaly_duration_seconds: 0,
            count_basis: CountBasis::PatternTypes,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SkylineError {
    #[error("skyline requires a non-empty pattern library")]
    EmptyLibrary,
    #[error("bin_seconds must be > 0")]
    BinNotPositive,
    #[error("thresholds must satisfy 0 <= few < many <= 1")]
    ThresholdOrder,
    #[error("min_anomaly_duration_seconds must be >= 0")]
    NegativeAnomalyDuration,
}

impl SkylineConfig {
    pub fn validate(&self) -> Result<(), SkylineError> {
        if self.bin_seconds <= 0 {
            return Err(SkylineError::BinNotPositive);
        }
        let ordered = 0.0 <= self.few_threshold
            && self.few_threshold < self.many_threshold
            && self.many_threshold <= 1.0;
        if !ordered {
            return Err(SkylineError::ThresholdOrder);
        }
        if self.min_anomaly_duration_seconds < 0 {
            return Err(SkylineError::NegativeAnomalyDuration);
        }
        Ok(())
    }

    fn label(&self, fraction: f64) -> SkylineLabel {
        if fraction < self.few_threshold {
            SkylineLabel::Few
        } else if fraction >= self.many_threshold {
            SkylineLabel::Many
        } else {
            SkylineLabel::Medium
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SkylineLabel {
    Few,
    Medium,
    Many,
}

impl std::fmt::Display for SkylineLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SkylineLabel::Few => "FEW",
            SkylineLabel::Medium => "MEDIUM",
            SkylineLabel::Many => "MANY",
        };
        f.write_str(s)
    }
}

/// One raw bin of the skyline series.
#[derive(Debug, Clone, PartialEq)]
pub struct SkylineBin {
    pub interval: Interval,
    pub present_patterns: BTreeSet<usize>,
    pub count: usize,
    pub fraction: f64,
    pub label: SkylineLabel,
}

/// A maximal run of same-label bins. `fraction` is the largest bin
/// fraction inside the run (so the label stays consistent with it) and
/// `present_patterns` is the union over the run's bins.
#[derive(Debug, Clone, PartialEq)]
pub struct SkylineInterval {
    pub interval: Interval,
    pub label: SkylineLabel,
    pub fraction: f64,
    pub present_patterns: BTreeSet<usize>,
}

/// Per-bin fractions of library patterns present.
///
/// `instances` are `(pattern_id, envelope)` pairs of one subject;
/// `timeline` is cut into `bin_seconds` bins (the last one truncated).
/// An envelope counts for every bin it intersects, endpoints included.
pub fn skyline_bins(
    instances: &[(usize, Interval)],
    library_size: usize,
    timeline: Interval,
    cfg: &SkylineConfig,
) -> Result<Vec<SkylineBin>, SkylineError> {
    cfg.validate()?;
    if library_size == 0 {
        return Err(SkylineError::EmptyLibrary);
    }
    let mut bins = Vec::new();
    let mut start = timeline.start;
    while start < timeline.end {
        let end = (start + cfg.bin_seconds).min(timeline.end);
        let bin = Interval::new(start, end);
        let mut present = BTreeSet::new();
        let mut instance_count = 0usize;
        for (pattern_id, envelope) in instances {
            if envelope.intersects(&bin) {
                present.insert(*pattern_id);
                instance_count += 1;
            }
        }
        let count = match cfg.count_basis {
            CountBasis::PatternTypes => present.len(),
            CountBasis::InstanceCount => instance_count,
        };
        // The instance-count basis can exceed the library size; cap the
        // fraction so labels keep their [0, 1] reading.
        let fraction = (count as f64 / library_size as f64).min(1.0);
        bins.push(SkylineBin {
            interval: bin,
            present_patterns: present,
            count,
            fraction,
            label: cfg.label(fraction),
        });
        start = end;
    }
    Ok(bins)
}

/// The skyline: maximal same-label intervals tiling the timeline.
pub fn skyline(
    instances: &[(usize, Interval)],
    library_size: usize,
    timeline: Interval,
    cfg: &SkylineConfig,
) -> Result<Vec<SkylineInterval>, SkylineError> {
    let bins = skyline_bins(instances, library_size, timeline, cfg)?;
    Ok(merge_bins(bins))
}

fn merge_bins(bins: Vec<SkylineBin>) -> Vec<SkylineInterval> {
    let mut merged: Vec<SkylineInterval> = Vec::new();
    for bin in bins {
        match merged.last_mut() {
            Some(run) if run.label == bin.label => {
                run.interval.end = bin.interval.end;
                run.fraction = run.fraction.max(bin.fraction);
                run.present_patterns.extend(bin.present_patterns);
            }
            _ => merged.push(SkylineInterval {
                interval: bin.interval,
                label: bin.label,
                fraction: bin.fraction,
                present_patterns: bin.present_patterns,
            }),
        }
    }
    merged
}

/// FEW intervals at least `min_anomaly_duration_seconds` long, by start.
pub fn detect_anomalies(skyline: &[SkylineInterval], cfg: &SkylineConfig) -> Vec<Interval> {
    skyline
        .iter()
        .filter(|s| {
            s.label == SkylineLabel::Few
                && s.interval.duration() >= cfg.min_anomaly_duration_seconds
        })
        .map(|s| s.interval)
        .collect()
}

fn format_pattern_ids(ids: &BTreeSet<usize>) -> String {
    if ids.is_empty() {
        return "-".to_string();
    }
    ids.iter()
        .map(|id| id.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Writes the merged skyline, one row per interval:
/// `subject  start  end  label  fraction  present_patterns`.
pub fn write_skyline_tsv<W: Write>(
    subject: &str,
    skyline: &[SkylineInterval],
    mut out: W,
    header: bool,
) -> std::io::Result<()> {
    if header {
        writeln!(out, "subject\tstart\tend\tlabel\tfraction\tpresent_patterns")?;
    }
    for row in skyline {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{:.6}\t{}",
            subject,
            row.interval.start,
            row.interval.end,
            row.label,
            row.fraction,
            format_pattern_ids(&row.present_patterns)
        )?;
    }
    Ok(())
}

/// Writes the raw per-bin series suitable for plotting:
/// `subject  bin_start  bin_end  count  fraction  label`.
pub fn write_bins_tsv<W: Write>(
    subject: &str,
    bins: &[SkylineBin],
    mut out: W,
    header: bool,
) -> std::io::Result<()> {
    if header {
        writeln!(out, "subject\tbin_start\tbin_end\tcount\tfraction\tlabel")?;
    }
    for bin in bins {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{:.6}\t{}",
            subject,
            bin.interval.start,
            bin.interval.end,
            bin.count,
            bin.fraction,
            bin.label
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SkylineConfig {
        SkylineConfig::default()
    }

    #[test]
    fn empty_instances_make_one_few_interval() {
        let timeline = Interval::new(0, 86_400);
        let sky = skyline(&[], 10, timeline, &cfg()).unwrap();
        assert_eq!(sky.len(), 1);
        assert_eq!(sky[0].label, SkylineLabel::Few);
        assert_eq!(sky[0].interval, timeline);
        assert!(detect_anomalies(&sky, &cfg()).len() == 1);
    }

    #[test]
    fn threshold_boundaries_are_strict_few_inclusive_many() {
        let timeline = Interval::new(0, 3600);
        // 1 of 10 patterns present: fraction 0.1, *not* FEW.
        let one = vec![(0usize, Interval::new(100, 200))];
        let sky = skyline(&one, 10, timeline, &cfg()).unwrap();
        assert_eq!(sky[0].fraction, 0.1);
        assert_eq!(sky[0].label, SkylineLabel::Medium);

        // 3 of 10 patterns present: fraction 0.3 is MANY.
        let three = vec![
            (0usize, Interval::new(100, 200)),
            (1usize, Interval::new(100, 200)),
            (2usize, Interval::new(100, 200)),
        ];
        let sky = skyline(&three, 10, timeline, &cfg()).unwrap();
        assert_eq!(sky[0].fraction, 0.3);
        assert_eq!(sky[0].label, SkylineLabel::Many);
    }

    #[test]
    fn empty_library_is_an_error() {
        let err = skyline(&[], 0, Interval::new(0, 100), &cfg()).unwrap_err();
        assert_eq!(err, SkylineError::EmptyLibrary);
    }

    #[test]
    fn intervals_tile_the_timeline() {
        let timeline = Interval::new(0, 10_000);
        let instances = vec![
            (0usize, Interval::new(0, 3600)),
            (1usize, Interval::new(0, 3599)),
            (0usize, Interval::new(7300, 8000)),
        ];
        let sky = skyline(&instances, 2, timeline, &cfg()).unwrap();
        assert_eq!(sky[0].interval.start, timeline.start);
        assert_eq!(sky.last().unwrap().interval.end, timeline.end);
        for pair in sky.windows(2) {
            assert_eq!(pair[0].interval.end, pair[1].interval.start);
            assert_ne!(pair[0].label, pair[1].label, "maximal merging");
        }
    }

    #[test]
    fn single_pattern_present_everywhere_is_many() {
        let timeline = Interval::new(0, 7200);
        let instances = vec![(0usize, Interval::new(0, 7200))];
        let sky = skyline(&instances, 1, timeline, &cfg()).unwrap();
        assert_eq!(sky.len(), 1);
        assert_eq!(sky[0].label, SkylineLabel::Many);
        assert_eq!(sky[0].fraction, 1.0);
    }

    #[test]
    fn instance_count_basis_counts_occurrences() {
        let timeline = Interval::new(0, 3600);
        let instances = vec![
            (0usize, Interval::new(0, 100)),
            (0usize, Interval::new(200, 300)),
            (0usize, Interval::new(400, 500)),
        ];
        let type_based = skyline(&instances, 10, timeline, &cfg()).unwrap();
        assert_eq!(type_based[0].label, SkylineLabel::Medium); // 1/10

        let count_cfg = SkylineConfig {
            count_basis: CountBasis::InstanceCount,
            ..cfg()
        };
        let count_based = skyline(&instances, 10, timeline, &count_cfg).unwrap();
        assert_eq!(count_based[0].fraction, 0.3); // 3/10
        assert_eq!(count_based[0].label, SkylineLabel::Many);
    }

    #[test]
    fn anomaly_filter_keeps_long_few_intervals() {
        let timeline = Interval::new(0, 86_400);
        // Patterns cover everything except a 13-hour hole.
        let hole_start = 4 * 3600;
        let hole_end = 17 * 3600;
        let mut instances = Vec::new();
        for id in 0..5usize {
            instances.push((id, Interval::new(0, hole_start)));
            instances.push((id, Interval::new(hole_end, 86_400)));
        }
        let sky = skyline(&instances, 5, timeline, &cfg()).unwrap();
        let anomalies = detect_anomalies(&sky, &cfg());
        assert_eq!(anomalies.len(), 1);
        // Boundary bins still touch the flanking envelopes, so the hole
        // interior is FEW.
        assert_eq!(anomalies[0], Interval::new(hole_start + 3600, hole_end - 3600));
        assert_eq!(anomalies[0].duration(), 11 * 3600);

        let all_many = skyline(
            &(0..5usize).map(|id| (id, timeline)).collect::<Vec<_>>(),
            5,
            timeline,
            &cfg(),
        )
        .unwrap();
        assert!(detect_anomalies(&all_many, &cfg()).is_empty());
    }

    #[test]
    fn minimum_anomaly_duration_filters_short_few() {
        let long_cfg = SkylineConfig {
            min_anomaly_duration_seconds: 3600,
            ..cfg()
        };
        let sky = vec![
            SkylineInterval {
                interval: Interval::new(0, 1800),
                label: SkylineLabel::Few,
                fraction: 0.0,
                present_patterns: BTreeSet::new(),
            },
            SkylineInterval {
                interval: Interval::new(1800, 3600),
                label: SkylineLabel::Many,
                fraction: 1.0,
                present_patterns: BTreeSet::new(),
            },
            SkylineInterval {
                interval: Interval::new(3600, 14_400),
                label: SkylineLabel::Few,
                fraction: 0.0,
                present_patterns: BTreeSet::new(),
            },
        ];
        let anomalies = detect_anomalies(&sky, &long_cfg);
        assert_eq!(anomalies, vec![Interval::new(3600, 14_400)]);
    }

    #[test]
    fn config_validation_names_violations() {
        let bad = SkylineConfig {
            few_threshold: 0.5,
            many_threshold: 0.3,
            ..cfg()
        };
        assert_eq!(bad.validate().unwrap_err(), SkylineError::ThresholdOrder);
        let bad = SkylineConfig {
            bin_seconds: 0,
            ..cfg()
        };
        assert_eq!(bad.validate().unwrap_err(), SkylineError::BinNotPositive);
    }
}
