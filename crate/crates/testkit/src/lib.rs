//! Test-only support code: an independent brute-force mining oracle,
//! random dataset generators, and synthetic metric fixtures with a
//! corruption harness.
//!
//! Nothing in here is used by the shipping crates; it exists so tests can
//! check the real implementations against independently written ones.

pub mod datasets;
pub mod fixture;
pub mod oracle;
