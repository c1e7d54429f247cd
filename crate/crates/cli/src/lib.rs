//! Experiment runner for delayed-label stream benchmarks.

pub mod commands;
pub mod config;
pub mod output;
