//! File formats, synthetic data generators and subcommand implementations for
//! the `weednet` command-line tool.
//!
//! The algorithms live in `weednet-core`; this crate adds PNG decoding, CSV
//! manifests, the binary weight format, JSON reports and a run manifest that
//! hashes every artifact a stage writes.

pub mod commands;
pub mod config;
pub mod error;
pub mod imageio;
pub mod manifest;
pub mod reports;
pub mod run_manifest;
pub mod synth;
pub mod weights;

pub use error::{CliError, Result};
