//! Synthetic two-week metric fixtures with planted temporal patterns,
//! plus a corruption harness for detection tests.
//!
//! The fixtures emit one CSV per week (five weekdays each, no weekend
//! samples). Every concept bursts to a HIGH plateau on a fixed hourly
//! schedule, so the planted patterns recur every hour of every weekday
//! and a well-behaved detector sees a fully MANY skyline on clean days.

use skymine::facts::Fact;
use skymine::interval::{Interval, Timestamp};
use skymine::mining::{Pattern, Relation};

/// Monday 00:00:00 UTC. The training week runs Mon-Fri from here.
pub const TRAIN_WEEK_START: Timestamp = 1_616_371_200;
/// The following Monday 00:00:00 UTC; the test week runs Mon-Fri.
pub const TEST_WEEK_START: Timestamp = TRAIN_WEEK_START + 7 * 86_400;

pub const SUBJECT: &str = "server1";
const HIGH_VALUE: f64 = 90.0;

/// What to damage in the test week.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corruption {
    None,
    /// Drop every concept's samples on the given weekday (0 = Monday).
    AllConceptsOnDay(usize),
    /// Drop one concept's samples on the given weekday (0 = Monday).
    ConceptOnDay {
        concept: &'static str,
        day: usize,
    },
    /// Drop one concept's samples for the whole week.
    ConceptEveryDay(&'static str),
}

/// An hourly HIGH plateau: samples every minute from `first_minute`
/// through `last_minute` inclusive, each hour of each weekday.
#[derive(Debug, Clone, Copy)]
struct Burst {
    concept: &'static str,
    first_minute: i64,
    last_minute: i64,
}

pub struct PlantedFixture {
    pub config_toml: String,
    pub train_csv: String,
    pub test_csv: String,
    /// The planted two-fact pattern the miner must recover.
    pub planted_size2: Pattern,
    /// The planted three-fact pattern the miner must recover (only set
    /// for the five-concept fixture).
    pub planted_size3: Option<Pattern>,
    /// Day span `[00:00, 24:00)` of the corrupted test-week day, if any.
    pub corrupted_day: Option<Interval>,
}

const FIVE_CONCEPT_BURSTS: [Burst; 5] = [
    Burst { concept: "cpu_user", first_minute: 0, last_minute: 9 },
    Burst { concept: "mem_free", first_minute: 20, last_minute: 29 },
    Burst { concept: "bytes_recv", first_minute: 32, last_minute: 52 },
    Burst { concept: "bytes_sent", first_minute: 36, last_minute: 44 },
    Burst { concept: "cpu_sys", first_minute: 54, last_minute: 57 },
];

const PAIR_BURSTS: [Burst; 2] = [
    Burst { concept: "cpu_user", first_minute: 0, last_minute: 9 },
    Burst { concept: "mem_free", first_minute: 20, last_minute: 29 },
];

fn config_toml(bursts: &[Burst]) -> String {
    let mut text = String::new();
    for burst in bursts {
        text.push_str(&format!(
            r#"[concepts.{}]
state_bins = [
  {{ lower = -inf, upper = 50.0, symbol = "LOW" }},
  {{ lower = 50.0, upper = inf, symbol = "HIGH" }},
]

"#,
            burst.concept
        ));
    }
    text.push_str(
        r#"[mining]
mode = "most-recent"
max_window_seconds = 36000
before_max_gap_seconds = 900
min_horizontal_support = 1
coverage = { semantics = "distinct-days", min_days = 3 }
"#,
    );
    text
}

fn week_csv(week_start: Timestamp, bursts: &[Burst], corruption: Corruption) -> String {
    let mut csv = String::from("subject_id,concept_id,timestamp,value\n");
    for day in 0..5 {
        for burst in bursts {
            let dropped = match corruption {
                Corruption::None => false,
                Corruption::AllConceptsOnDay(d) => d == day,
                Corruption::ConceptOnDay { concept, day: d } => {
                    d == day && concept == burst.concept
                }
                Corruption::ConceptEveryDay(concept) => concept == burst.concept,
            };
            if dropped {
                continue;
            }
            for hour in 0..24 {
                for minute in burst.first_minute..=burst.last_minute {
                    let ts = week_start + (day as i64) * 86_400 + hour * 3_600 + minute * 60;
                    csv.push_str(&format!(
                        "{},{},{},{}\n",
                        SUBJECT, burst.concept, ts, HIGH_VALUE
                    ));
                }
            }
        }
    }
    csv
}

fn fixture(bursts: &[Burst], corruption: Corruption, size3: bool) -> PlantedFixture {
    let corrupted_day = match corruption {
        Corruption::None | Corruption::ConceptEveryDay(_) => None,
        Corruption::AllConceptsOnDay(d) | Corruption::ConceptOnDay { day: d, .. } => {
            let start = TEST_WEEK_START + (d as i64) * 86_400;
            Some(Interval::new(start, start + 86_400))
        }
    };
    PlantedFixture {
        config_toml: config_toml(bursts),
        train_csv: week_csv(TRAIN_WEEK_START, bursts, Corruption::None),
        test_csv: week_csv(TEST_WEEK_START, bursts, corruption),
        planted_size2: Pattern {
            facts: vec![
                Fact::new("cpu_user_STATE", "HIGH", "MEDIUM"),
                Fact::new("mem_free_STATE", "HIGH", "MEDIUM"),
            ],
            relations: vec![Relation::Before],
        },
        planted_size3: size3.then(|| Pattern {
            facts: vec![
                Fact::new("bytes_recv_STATE", "HIGH", "LONG"),
                Fact::new("bytes_sent_STATE", "HIGH", "MEDIUM"),
                Fact::new("cpu_sys_STATE", "HIGH", "MEDIUM"),
            ],
            relations: vec![Relation::During, Relation::Before],
        }),
        corrupted_day,
    }
}

/// Five concepts; plants a two-fact pattern (cpu_user HIGH before
/// mem_free HIGH) and a three-fact one (bytes_sent HIGH during a long
/// bytes_recv HIGH, before cpu_sys HIGH), every hour of every weekday.
pub fn planted_fixture(corruption: Corruption) -> PlantedFixture {
    fixture(&FIVE_CONCEPT_BURSTS, corruption, true)
}

/// Two concepts whose only large pattern is the planted pair, so removing
/// either concept's samples for a day leaves that day with no patterns at
/// all.
pub fn minimal_pair_fixture(corruption: Corruption) -> PlantedFixture {
    fixture(&PAIR_BURSTS, corruption, false)
}

/// A dense ingestion fixture: `concepts` metrics sampled once a minute for
/// `days` days, with a deterministic value wave crossing the 50.0 state
/// boundary.
pub fn dense_fixture_csv(concepts: usize, days: usize) -> String {
    let mut csv = String::from("subject_id,concept_id,timestamp,value\n");
    let minutes = (days as i64) * 24 * 60;
    for c in 0..concepts {
        for m in 0..minutes {
            let ts = TRAIN_WEEK_START + m * 60;
            let value = ((m * 7 + (c as i64) * 13) % 100) as f64;
            csv.push_str(&format!("{},metric{},{},{}\n", SUBJECT, c, ts, value));
        }
    }
    csv
}

/// Knowledge-base configuration matching [`dense_fixture_csv`].
pub fn dense_fixture_config(concepts: usize) -> String {
    let mut text = String::new();
    for c in 0..concepts {
        text.push_str(&format!(
            r#"[concepts.metric{c}]
state_bins = [
  {{ lower = -inf, upper = 50.0, symbol = "LOW" }},
  {{ lower = 50.0, upper = inf, symbol = "HIGH" }},
]

"#
        ));
    }
    text
}
