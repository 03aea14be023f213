//! Configuration, check orchestration and report files for the `sqfn` binary.

pub mod checks;
pub mod config;
pub mod report;
