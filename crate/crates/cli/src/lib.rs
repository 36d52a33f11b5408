//! Scenario runner behind the `hitchlab` binary.

pub mod commands;
pub mod config;
pub mod report;
