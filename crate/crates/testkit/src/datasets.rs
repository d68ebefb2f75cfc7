//! Seeded random item-list databases and mining configurations for
//! differential and property testing.

use rand::Rng;

use skymine::facts::{Fact, FactInstance, ItemListDB};
use skymine::interval::Interval;
use skymine::mining::{CoverageThreshold, MiningConfig, MiningMode};

const VALUES: [&str; 2] = ["LOW", "HIGH"];
const CLASSES: [&str; 2] = ["SHORT", "LONG"];

/// A random database of at most `max_fact_types` fact types, at most
/// `max_instances` instances and 1..=3 subjects, clustered on up to three
/// calendar days so day-based coverage thresholds have something to bite.
pub fn random_db(
    rng: &mut impl Rng,
    max_fact_types: usize,
    max_instances: usize,
) -> ItemListDB {
    let fact_count = rng.gen_range(1..=max_fact_types);
    let facts: Vec<Fact> = (0..fact_count)
        .map(|i| {
            Fact::new(
                &format!("m{i}_STATE"),
                VALUES[i % VALUES.len()],
                CLASSES[(i / VALUES.len()) % CLASSES.len()],
            )
        })
        .collect();
    let subject_count = rng.gen_range(1..=3);
    let day_count = rng.gen_range(1..=3i64);
    let instance_count = rng.gen_range(1..=max_instances);

    let mut instances = Vec::with_capacity(instance_count);
    for _ in 0..instance_count {
        let fact = facts[rng.gen_range(0..facts.len())].clone();
        let subject = format!("s{}", rng.gen_range(0..subject_count));
        let day = rng.gen_range(0..day_count);
        let start = day * 86_400 + rng.gen_range(0..2_000);
        let len = rng.gen_range(0..400);
        instances.push(FactInstance {
            fact,
            subject_id: subject,
            interval: Interval::new(start, start + len),
        });
    }
    ItemListDB::from_instances(instances)
}

/// A random but always-valid mining configuration.
pub fn random_config(rng: &mut impl Rng, mode: Option<MiningMode>) -> MiningConfig {
    let max_window_seconds = rng.gen_range(500..3_000);
    let before_max_gap_seconds = rng.gen_range(0..=max_window_seconds);
    let coverage = match rng.gen_range(0..4) {
        0 => CoverageThreshold::SumDuration {
            min_seconds: rng.gen_range(1..1_500),
        },
        1 => CoverageThreshold::DistinctDays {
            min_days: rng.gen_range(1..=2),
        },
        _ => CoverageThreshold::SumDuration { min_seconds: 0 },
    };
    let mode = mode.unwrap_or_else(|| match rng.gen_range(0..3) {
        0 => MiningMode::All,
        1 => MiningMode::MostRecent,
        _ => MiningMode::Latest,
    });
    MiningConfig {
        mode,
        max_window_seconds,
        before_max_gap_seconds: Some(before_max_gap_seconds),
        min_horizontal_support: rng.gen_range(1..=2),
        min_vertical_support: if rng.gen_bool(0.5) { 0.0 } else { 0.4 },
        max_size: None,
        coverage,
    }
}
