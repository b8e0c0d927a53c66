//! Library half of the `onerun` command-line tool.

pub mod config;
pub mod experiments;
pub mod output;
pub mod runner;
