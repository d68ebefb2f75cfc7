//! The pipeline commands behind the CLI subcommands.
//!
//! Every command reads the knowledge-base config, works through the core
//! stages and writes its outputs under the chosen directory. All outputs
//! are deterministic: identical inputs and flags produce byte-identical
//! files.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use skymine::abstraction::{abstract_gradient, abstract_state, AbstractInterval, Sample};
use skymine::facts::{build_item_lists, ItemListDB};
use skymine::interval::Interval;
use skymine::knowledge::{load_knowledge_base, KnowledgeBase};
use skymine::library::PatternLibrary;
use skymine::matching::{match_patterns, write_instances_tsv, MatchReport};
use skymine::mining::{
    mine, CoverageThreshold, MinedPattern, MiningConfig, MiningMode, MiningResult,
};
use skymine::skyline::{
    detect_anomalies, skyline_bins, write_bins_tsv, write_skyline_tsv, SkylineBin,
    SkylineInterval, SkylineLabel,
};

use crate::error::CliError;
use crate::ingest::{filter_weekdays, ingest_csv, IngestStats};

pub const FACTS_FILE: &str = "facts.tsv";
pub const TEST_FACTS_FILE: &str = "test_facts.tsv";
pub const LIBRARY_FILE: &str = "library.toml";
pub const INSTANCES_FILE: &str = "instances.tsv";
pub const SKYLINE_FILE: &str = "skyline.tsv";
pub const BINS_FILE: &str = "skyline_bins.tsv";

/// Mining parameters given on the command line; unset ones fall back to
/// the config file's `[mining]` section.
#[derive(Debug, Default, Clone)]
pub struct MiningOverrides {
    pub mode: Option<MiningMode>,
    pub max_window_seconds: Option<i64>,
    pub before_max_gap_seconds: Option<i64>,
    pub coverage_days: Option<u32>,
    pub min_coverage_seconds: Option<i64>,
    pub min_horizontal: Option<u32>,
}

/// Pattern selection for the library (the manual-curation stage).
#[derive(Debug, Clone)]
pub struct Selection {
    /// Pattern sizes promoted into the library.
    pub sizes: Vec<u32>,
    /// Keep only the k patterns with the highest total horizontal support.
    pub top_k: Option<usize>,
    /// Ask on stdin which of the candidates to keep.
    pub interactive: bool,
}

impl Default for Selection {
    fn default() -> Self {
        Self {
            sizes: vec![2, 3],
            top_k: None,
            interactive: false,
        }
    }
}

/// Parses durations like `90`, `90s`, `15m`, `10h` or `2d` into seconds.
pub fn parse_duration(text: &str) -> Result<i64, String> {
    let text = text.trim();
    let (digits, unit) = match text.find(|c: char| !c.is_ascii_digit()) {
        Some(split) => text.split_at(split),
        None => (text, ""),
    };
    let value: i64 = digits
        .parse()
        .map_err(|_| format!("invalid duration {text:?}"))?;
    let multiplier = match unit {
        "" | "s" => 1,
        "m" => 60,
        "h" => 3_600,
        "d" => 86_400,
        other => return Err(format!("unknown duration unit {other:?}")),
    };
    Ok(value * multiplier)
}

fn resolve_mining(
    kb: &KnowledgeBase,
    overrides: &MiningOverrides,
    max_size: Option<u32>,
) -> Result<MiningConfig, CliError> {
    let mut cfg = kb.mining.clone();
    if let Some(mode) = overrides.mode {
        cfg.mode = mode;
    }
    if let Some(window) = overrides.max_window_seconds {
        cfg.max_window_seconds = window;
    }
    if let Some(gap) = overrides.before_max_gap_seconds {
        cfg.before_max_gap_seconds = Some(gap);
    }
    if let Some(days) = overrides.coverage_days {
        cfg.coverage = CoverageThreshold::DistinctDays { min_days: days };
    }
    if let Some(seconds) = overrides.min_coverage_seconds {
        cfg.coverage = CoverageThreshold::SumDuration {
            min_seconds: seconds,
        };
    }
    if let Some(h) = overrides.min_horizontal {
        cfg.min_horizontal_support = h;
    }
    if max_size.is_some() {
        cfg.max_size = max_size;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report_ingest(label: &str, stats: &IngestStats) {
    eprintln!(
        "{label}: {} rows, {} samples kept ({} unknown-concept, {} duplicate, {} non-finite)",
        stats.rows, stats.kept, stats.unknown_concept, stats.duplicate_timestamp, stats.non_finite
    );
}

/// Groups sorted samples into (subject, concept) streams and runs the
/// state and trend abstractions on each.
pub fn build_abstractions(kb: &KnowledgeBase, samples: &[Sample]) -> Vec<AbstractInterval> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < samples.len() {
        let key = (&samples[start].subject_id, &samples[start].concept_id);
        let mut end = start + 1;
        while end < samples.len()
            && (&samples[end].subject_id, &samples[end].concept_id) == key
        {
            end += 1;
        }
        let stream = &samples[start..end];
        let def = kb
            .concept(&stream[0].concept_id)
            .expect("unknown concepts were rejected at ingest");
        out.extend(abstract_state(stream, def));
        out.extend(abstract_gradient(stream, def));
        start = end;
    }
    out
}

fn write_file(path: &Path, write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    fs::write(path, buf).map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

pub struct AbstractOutcome {
    pub db: ItemListDB,
    pub stats: IngestStats,
    pub facts_path: PathBuf,
}

/// Ingest a CSV, abstract it and persist the fact database.
pub fn cmd_abstract(
    config: &Path,
    input: &Path,
    out_dir: &Path,
    weekdays_only: bool,
    facts_file: &str,
) -> Result<AbstractOutcome, CliError> {
    let kb = load_knowledge_base(config)?;
    abstract_into(&kb, input, out_dir, weekdays_only, facts_file)
}

fn abstract_into(
    kb: &KnowledgeBase,
    input: &Path,
    out_dir: &Path,
    weekdays_only: bool,
    facts_file: &str,
) -> Result<AbstractOutcome, CliError> {
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", out_dir.display())))?;
    let ingested = ingest_csv(input, kb)?;
    report_ingest(&input.display().to_string(), &ingested.stats);
    let samples = if weekdays_only {
        let kept = filter_weekdays(ingested.samples);
        eprintln!("weekday filter kept {} samples", kept.len());
        kept
    } else {
        ingested.samples
    };
    let abstractions = build_abstractions(kb, &samples);
    let db = build_item_lists(&abstractions, &kb.duration_classes);
    let facts_path = out_dir.join(facts_file);
    write_file(&facts_path, |buf| db.write_tsv(buf))?;
    eprintln!(
        "abstracted {} intervals over {} fact types -> {}",
        db.len(),
        db.facts().count(),
        facts_path.display()
    );
    Ok(AbstractOutcome {
        db,
        stats: ingested.stats,
        facts_path,
    })
}

fn total_support(mined: &MinedPattern) -> u64 {
    mined.horizontal_support.values().map(|&v| u64::from(v)).sum()
}

fn prompt_selection(candidates: &[&MinedPattern]) -> Result<BTreeSet<usize>, CliError> {
    eprintln!("mined candidates:");
    for (idx, mined) in candidates.iter().enumerate() {
        eprintln!(
            "  [{idx}] size={} support={} coverage={:?} {}",
            mined.pattern.size(),
            total_support(mined),
            mined.coverage.values().collect::<Vec<_>>(),
            mined.pattern
        );
    }
    eprint!("patterns to keep (e.g. 0,2-4; empty keeps all): ");
    std::io::stderr().flush().ok();
    let mut line = String::new();
    std::io::stdin()
        .lock()
        .read_line(&mut line)
        .map_err(|e| CliError::data(format!("cannot read selection: {e}")))?;
    parse_id_selection(line.trim(), candidates.len())
}

/// Parses `0,2-4` style selections.
pub fn parse_id_selection(text: &str, limit: usize) -> Result<BTreeSet<usize>, CliError> {
    let mut keep = BTreeSet::new();
    if text.is_empty() {
        keep.extend(0..limit);
        return Ok(keep);
    }
    for token in text.split(',') {
        let token = token.trim();
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| CliError::usage(format!("invalid pattern id {s:?}")))
        };
        let (lo, hi) = match token.split_once('-') {
            Some((lo, hi)) => (parse(lo)?, parse(hi)?),
            None => {
                let id = parse(token)?;
                (id, id)
            }
        };
        if lo > hi || hi >= limit {
            return Err(CliError::usage(format!(
                "pattern id range {token:?} out of bounds (0..{limit})"
            )));
        }
        keep.extend(lo..=hi);
    }
    Ok(keep)
}

fn select_library(
    result: &MiningResult,
    cfg: &MiningConfig,
    selection: &Selection,
) -> Result<PatternLibrary, CliError> {
    let sizes: BTreeSet<u32> = selection.sizes.iter().copied().collect();
    let mut candidates: Vec<&MinedPattern> = result
        .all_patterns()
        .filter(|mp| sizes.contains(&(mp.pattern.size() as u32)))
        .collect();
    if let Some(k) = selection.top_k {
        candidates.sort_by(|a, b| {
            total_support(b)
                .cmp(&total_support(a))
                .then_with(|| a.pattern.cmp(&b.pattern))
        });
        candidates.truncate(k);
        candidates.sort_by(|a, b| a.pattern.cmp(&b.pattern));
    }
    if selection.interactive && !candidates.is_empty() {
        let keep = prompt_selection(&candidates)?;
        candidates = candidates
            .into_iter()
            .enumerate()
            .filter(|(idx, _)| keep.contains(idx))
            .map(|(_, mp)| mp)
            .collect();
    }
    let chosen: BTreeSet<&skymine::mining::Pattern> =
        candidates.iter().map(|mp| &mp.pattern).collect();
    Ok(PatternLibrary::from_mining_result(result, cfg, |mp| {
        chosen.contains(&mp.pattern)
    }))
}

pub struct TrainOutcome {
    pub library: PatternLibrary,
    pub library_path: PathBuf,
    pub facts_path: PathBuf,
    pub mined_total: usize,
}

/// Mine a previously written fact database into a pattern library.
pub fn cmd_mine(
    config: &Path,
    facts_path: &Path,
    out_dir: &Path,
    overrides: &MiningOverrides,
    selection: &Selection,
) -> Result<TrainOutcome, CliError> {
    let kb = load_knowledge_base(config)?;
    let file = fs::File::open(facts_path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", facts_path.display())))?;
    let db = ItemListDB::read_tsv(BufReader::new(file))?;
    mine_into(&kb, &db, facts_path.to_path_buf(), out_dir, overrides, selection)
}

fn mine_into(
    kb: &KnowledgeBase,
    db: &ItemListDB,
    facts_path: PathBuf,
    out_dir: &Path,
    overrides: &MiningOverrides,
    selection: &Selection,
) -> Result<TrainOutcome, CliError> {
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", out_dir.display())))?;
    let max_size = selection.sizes.iter().copied().max();
    let cfg = resolve_mining(kb, overrides, max_size)?;
    if db.is_empty() {
        eprintln!("warning: no facts to mine; writing an empty library");
    }
    let result = mine(db, &cfg)?;
    let library = select_library(&result, &cfg, selection)?;
    if library.is_empty() && !db.is_empty() {
        eprintln!("warning: no pattern satisfied the thresholds");
    }
    let library_path = out_dir.join(LIBRARY_FILE);
    fs::write(&library_path, library.to_toml())
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", library_path.display())))?;
    let per_level: Vec<String> = result
        .levels
        .iter()
        .enumerate()
        .map(|(i, level)| format!("size {}: {}", i + 1, level.len()))
        .collect();
    eprintln!(
        "mined {} patterns ({}); selected {} -> {}",
        result.pattern_count(),
        per_level.join(", "),
        library.len(),
        library_path.display()
    );
    Ok(TrainOutcome {
        library,
        library_path,
        facts_path,
        mined_total: result.pattern_count(),
    })
}

/// Abstract, mine and select the library in one go.
pub fn cmd_train(
    config: &Path,
    input: &Path,
    out_dir: &Path,
    weekdays_only: bool,
    overrides: &MiningOverrides,
    selection: &Selection,
) -> Result<TrainOutcome, CliError> {
    let kb = load_knowledge_base(config)?;
    let abstracted = abstract_into(&kb, input, out_dir, weekdays_only, FACTS_FILE)?;
    mine_into(
        &kb,
        &abstracted.db,
        abstracted.facts_path,
        out_dir,
        overrides,
        selection,
    )
}

pub struct MatchOutcome {
    pub report: MatchReport,
    pub instances_path: PathBuf,
}

/// Match a library against a fact database file.
pub fn cmd_match(
    config: &Path,
    library_path: &Path,
    facts_path: &Path,
    out_dir: &Path,
    mode: Option<MiningMode>,
) -> Result<MatchOutcome, CliError> {
    let kb = load_knowledge_base(config)?;
    let library = PatternLibrary::load(library_path)?;
    let file = fs::File::open(facts_path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", facts_path.display())))?;
    let db = ItemListDB::read_tsv(BufReader::new(file))?;
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", out_dir.display())))?;
    let report = run_matching(&kb, &library, &db, mode)?;
    let instances_path = out_dir.join(INSTANCES_FILE);
    write_file(&instances_path, |buf| write_instances_tsv(&report, buf))?;
    eprintln!(
        "matched {} instances of {} patterns -> {}",
        report.instance_count(),
        library.len(),
        instances_path.display()
    );
    Ok(MatchOutcome {
        report,
        instances_path,
    })
}

fn run_matching(
    kb: &KnowledgeBase,
    library: &PatternLibrary,
    db: &ItemListDB,
    mode: Option<MiningMode>,
) -> Result<MatchReport, CliError> {
    if library.is_empty() {
        return Err(CliError::data(
            "pattern library is empty; train one first".to_string(),
        ));
    }
    let mut kb_check = kb.clone();
    kb_check.pattern_library = library.patterns();
    for violation in kb_check.validate_pattern_library() {
        eprintln!("warning: library inconsistent with config: {violation}");
    }
    // Matching defaults to ALL so anomaly scoring sees every occurrence,
    // whatever mode the library was mined in.
    let mut cfg = library.mining.clone();
    cfg.mode = mode.unwrap_or(MiningMode::All);
    cfg.validate()?;
    let report = match_patterns(&library.patterns(), db, &cfg);
    for fact in &report.unknown_facts {
        eprintln!("warning: library fact {fact} never occurs in this data");
    }
    Ok(report)
}

pub struct SubjectDetection {
    pub subject: String,
    pub timeline: Interval,
    pub bins: Vec<SkylineBin>,
    pub skyline: Vec<SkylineInterval>,
    pub anomalies: Vec<Interval>,
}

pub struct DetectOutcome {
    pub library_size: usize,
    pub subjects: Vec<SubjectDetection>,
    pub instances_path: PathBuf,
    pub skyline_path: PathBuf,
    pub bins_path: PathBuf,
}

impl DetectOutcome {
    pub fn total_anomalies(&self) -> usize {
        self.subjects.iter().map(|s| s.anomalies.len()).sum()
    }
}

fn format_duration(seconds: i64) -> String {
    let hours = seconds / 3_600;
    let minutes = (seconds % 3_600) / 60;
    let secs = seconds % 60;
    if hours > 0 {
        format!("{hours}h{minutes:02}m")
    } else if minutes > 0 {
        format!("{minutes}m{secs:02}s")
    } else {
        format!("{secs}s")
    }
}

/// Match the library on a test CSV, derive the skyline per subject and
/// report FEW periods.
pub fn cmd_detect(
    config: &Path,
    library_path: &Path,
    input: &Path,
    out_dir: &Path,
    weekdays_only: bool,
    bin_seconds: Option<i64>,
    mode: Option<MiningMode>,
) -> Result<DetectOutcome, CliError> {
    let kb = load_knowledge_base(config)?;
    let library = PatternLibrary::load(library_path)?;
    let abstracted = abstract_into(&kb, input, out_dir, weekdays_only, TEST_FACTS_FILE)?;
    let db = abstracted.db;

    let report = run_matching(&kb, &library, &db, mode)?;
    let mut skyline_cfg = kb.skyline.clone();
    if let Some(bin) = bin_seconds {
        skyline_cfg.bin_seconds = bin;
    }
    skyline_cfg
        .validate()
        .map_err(|e| CliError::config(e.to_string()))?;

    let mut subjects = Vec::new();
    for subject in db.subjects() {
        let timeline = db.time_extent(subject).expect("subject has instances");
        if timeline.duration() == 0 {
            eprintln!("warning: subject {subject} has a degenerate timeline; skipped");
            continue;
        }
        let envelopes: Vec<(usize, Interval)> = report
            .envelopes()
            .filter(|(_, _, s)| *s == subject)
            .map(|(id, envelope, _)| (id, envelope))
            .collect();
        let bins = skyline_bins(&envelopes, library.len(), timeline, &skyline_cfg)?;
        let merged = skymine::skyline::skyline(&envelopes, library.len(), timeline, &skyline_cfg)?;
        let anomalies = detect_anomalies(&merged, &skyline_cfg);
        subjects.push(SubjectDetection {
            subject: subject.clone(),
            timeline,
            bins,
            skyline: merged,
            anomalies,
        });
    }

    let instances_path = out_dir.join(INSTANCES_FILE);
    write_file(&instances_path, |buf| write_instances_tsv(&report, buf))?;
    let skyline_path = out_dir.join(SKYLINE_FILE);
    write_file(&skyline_path, |buf| {
        for (idx, subject) in subjects.iter().enumerate() {
            write_skyline_tsv(&subject.subject, &subject.skyline, &mut *buf, idx == 0)?;
        }
        if subjects.is_empty() {
            writeln!(buf, "subject\tstart\tend\tlabel\tfraction\tpresent_patterns")?;
        }
        Ok(())
    })?;
    let bins_path = out_dir.join(BINS_FILE);
    write_file(&bins_path, |buf| {
        for (idx, subject) in subjects.iter().enumerate() {
            write_bins_tsv(&subject.subject, &subject.bins, &mut *buf, idx == 0)?;
        }
        if subjects.is_empty() {
            writeln!(buf, "subject\tbin_start\tbin_end\tcount\tfraction\tlabel")?;
        }
        Ok(())
    })?;

    if subjects.is_empty() {
        eprintln!("warning: no test data; reports are empty");
    }
    for subject in &subjects {
        let few: Vec<&SkylineInterval> = subject
            .skyline
            .iter()
            .filter(|s| s.label == SkylineLabel::Few)
            .collect();
        let longest = subject
            .anomalies
            .iter()
            .map(|i| i.duration())
            .max()
            .unwrap_or(0);
        println!(
            "{}: {} FEW interval(s), {} reported as anomalies, longest {}",
            subject.subject,
            few.len(),
            subject.anomalies.len(),
            format_duration(longest)
        );
    }
    Ok(DetectOutcome {
        library_size: library.len(),
        subjects,
        instances_path,
        skyline_path,
        bins_path,
    })
}

/// Full pipeline: train on one CSV, then detect on another.
#[allow(clippy::too_many_arguments)]
pub fn cmd_run(
    config: &Path,
    train_csv: &Path,
    test_csv: &Path,
    out_dir: &Path,
    weekdays_only: bool,
    overrides: &MiningOverrides,
    selection: &Selection,
    bin_seconds: Option<i64>,
    mode: Option<MiningMode>,
) -> Result<(TrainOutcome, DetectOutcome), CliError> {
    let trained = cmd_train(config, train_csv, out_dir, weekdays_only, overrides, selection)?;
    let detected = cmd_detect(
        config,
        &trained.library_path,
        test_csv,
        out_dir,
        weekdays_only,
        bin_seconds,
        mode,
    )?;
    Ok((trained, detected))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn durations_parse() {
        assert_eq!(parse_duration("90"), Ok(90));
        assert_eq!(parse_duration("90s"), Ok(90));
        assert_eq!(parse_duration("15m"), Ok(900));
        assert_eq!(parse_duration("10h"), Ok(36_000));
        assert_eq!(parse_duration("2d"), Ok(172_800));
        assert!(parse_duration("10x").is_err());
        assert!(parse_duration("ten").is_err());
    }

    #[test]
    fn id_selections_parse() {
        let keep = parse_id_selection("", 4).unwrap();
        assert_eq!(keep.len(), 4);
        let keep = parse_id_selection("0,2-3", 5).unwrap();
        assert_eq!(keep.into_iter().collect::<Vec<_>>(), vec![0, 2, 3]);
        assert!(parse_id_selection("7", 5).is_err());
        assert!(parse_id_selection("3-1", 5).is_err());
        assert!(parse_id_selection("x", 5).is_err());
    }

    #[test]
    fn duration_formatting() {
        assert_eq!(format_duration(46_920), "13h02m");
        assert_eq!(format_duration(95), "1m35s");
        assert_eq!(format_duration(12), "12s");
    }
}
