//! skymine turns raw time-stamped metrics into symbolic interval
//! abstractions, mines recurring interval-based temporal patterns that
//! describe normal behavior, and flags time periods in which abnormally
//! few of those patterns occur.
//!
//! The pipeline is organized as a chain of small, pure stages:
//!
//! 1. [`knowledge`] loads the domain configuration (state bins, gradient
//!    thresholds, interpolation gaps, duration classes, skyline settings).
//! 2. [`abstraction`] converts raw samples into state and trend intervals.
//! 3. [`facts`] discretizes interval durations and builds the item-list
//!    database the miner consumes.
//! 4. [`mining`] mines frequent left-deep temporal patterns level by level.
//! 5. [`matching`] finds all instances of a pattern library in new data.
//! 6. [`skyline`] labels the timeline FEW / MEDIUM / MANY by the fraction
//!    of library patterns present and reports FEW periods as anomalies.

pub mod abstraction;
pub mod facts;
pub mod interval;
pub mod knowledge;
pub mod library;
pub mod matching;
pub mod mining;
pub mod skyline;

pub use interval::{Interval, Timestamp};
