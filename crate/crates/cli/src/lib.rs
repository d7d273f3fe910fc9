//! Experiment runner: configuration, pipeline stages and reports.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;
pub mod stats;
