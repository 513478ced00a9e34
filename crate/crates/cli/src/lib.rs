//! Command line front end of `kahler-toric`: suite files, check runs,
//! grid evaluations and the family listing.

pub mod checks;
pub mod config;
pub mod eval;
pub mod listing;
pub mod report;

/// Suite run by `check` without `--config`.
pub const DEFAULT_SUITE: &str = include_str!("../suites/default.toml");
