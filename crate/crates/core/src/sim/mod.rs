//! Configuration, Monte Carlo orchestration and file formats.

pub mod commands;
pub mod config;
pub mod link;
pub mod records;
pub mod runner;
pub mod seeds;

pub use config::SimConfig;
pub use runner::Runner;
