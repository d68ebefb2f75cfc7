//! Library backing the `skymine` binary: CSV ingestion and the pipeline
//! commands, kept out of `main.rs` so integration tests can drive them
//! directly.

pub mod error;
pub mod ingest;
pub mod pipeline;

pub use error::CliError;
