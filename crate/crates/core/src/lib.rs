//! Data-quality checks for tabular data.
//!
//! A declarative [`schema`] describes tables, keys, row rules and cross-table
//! rules. [`detectors`] find integrity issues, [`smells`] find suspicious but
//! legal values, and [`classify`] labels every issue with the kind of
//! constraint it breaks. [`triage`] aggregates labeled tickets.

pub mod classify;
pub mod cli;
pub mod detectors;
pub mod ingest;
pub mod schema;
pub mod smells;
pub mod taxonomy;
pub mod triage;
pub mod value;
