//! Configuration file parsing and flag overrides.
//!
//! Precedence is flag > file > default.

use std::path::Path;

use anyhow::{anyhow, Context, Result};
use decoy_core::protocol::{DEFAULT_ABORT_TOLERANCE, DEFAULT_ALPHA, DEFAULT_PULSES, DEFAULT_Z};
use decoy_core::source::DEFAULT_N_MAX;
use decoy_core::{AdversarySpec, SessionConfig, SourceSpec};
use serde::Deserialize;

/// Configuration as written on disk; every field is optional until resolved.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub pulses: Option<u64>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub n_max: Option<usize>,
    pub signal: Option<SourceSpec>,
    pub decoy: Option<SourceSpec>,
    pub adversary: Option<AdversarySpec>,
    pub confidence_z: Option<f64>,
    pub abort_tolerance: Option<f64>,
    pub expected_ratio: Option<f64>,
}

impl FileConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("invalid configuration JSON")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }
}

/// Values given on the command line.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub pulses: Option<u64>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
}

/// Merge file values, flag overrides and defaults. A missing seed is drawn
/// from the OS so that every report still carries the seed it used.
pub fn resolve(file: &FileConfig, overrides: &Overrides) -> Result<SessionConfig> {
    let require = |name: &str| anyhow!("configuration is missing \"{name}\"");
    let config = SessionConfig {
        pulses: overrides.pulses.or(file.pulses).unwrap_or(DEFAULT_PULSES),
        seed: overrides
            .seed
            .or(file.seed)
            .unwrap_or_else(rand::random::<u64>),
        alpha: overrides.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA),
        n_max: file.n_max.unwrap_or(DEFAULT_N_MAX),
        signal: file.signal.clone().ok_or_else(|| require("signal"))?,
        decoy: file.decoy.clone().ok_or_else(|| require("decoy"))?,
        adversary: file.adversary.clone().ok_or_else(|| require("adversary"))?,
        confidence_z: file.confidence_z.unwrap_or(DEFAULT_Z),
        abort_tolerance: file.abort_tolerance.unwrap_or(DEFAULT_ABORT_TOLERANCE),
        expected_ratio: file.expected_ratio,
    };
    config.validate()?;
    Ok(config)
}
