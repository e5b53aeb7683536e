//! Dataset loading, configuration, checkpoints and the command workflows
//! around [`wge_core`].
//!
//! - [`data`]: tab-separated triple files and vocabulary hashing
//! - [`config`]: flat `key = value` run configuration
//! - [`checkpoint`]: versioned, checksummed parameter files
//! - [`report`]: metric records and tables
//! - [`export`]: vocabulary, edge-list and relation-pair dumps
//! - [`commands`]: `prepare`, `train`, `evaluate`, `ablate`

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod data;
pub mod export;
pub mod report;
