//! Command line, JSON formats and verification suites for `crpchips-core`.

pub mod cli;
pub mod format;
pub mod parallel;
pub mod suites;
