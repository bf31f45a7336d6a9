use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use segfree::pipeline::{CorpusConfig, SystemSpec, TrainConfig};
use segfree::policy::{NaiveMode, SessionMode};

use crate::DataError;

pub const DEFAULT_OUTPUT: &str = "segfree-out";

/// Everything one experiment needs, read from a single TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Output root; the `--output` flag and `SEGFREE_OUTPUT` take precedence.
    pub output: Option<PathBuf>,
    pub corpus: CorpusConfig,
    pub train: TrainConfig,
    pub sweep: SweepConfig,
    pub evaluate: EvaluateConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            output: None,
            corpus: CorpusConfig::default(),
            train: TrainConfig::default(),
            sweep: SweepConfig::default(),
            evaluate: EvaluateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub split: String,
    pub modes: Vec<SessionMode>,
    pub k_min: usize,
    pub k_max: usize,
    pub beam: usize,
    pub history_cap: usize,
    pub noise: f64,
    pub max_new: Option<usize>,
    pub naive_mode: NaiveMode,
    pub fixed_length: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let spec = SystemSpec::default();
        SweepConfig {
            split: "test".into(),
            modes: SessionMode::ALL.to_vec(),
            k_min: 1,
            k_max: 10,
            beam: spec.beam,
            history_cap: spec.history_cap,
            noise: spec.noise,
            max_new: spec.max_new,
            naive_mode: spec.naive_mode,
            fixed_length: spec.fixed_length,
        }
    }
}

impl SweepConfig {
    pub fn ks(&self) -> std::ops::RangeInclusive<usize> {
        self.k_min..=self.k_max
    }

    pub fn spec(&self, mode: SessionMode, k: usize) -> SystemSpec {
        SystemSpec {
            mode,
            k,
            beam: self.beam,
            history_cap: self.history_cap,
            max_new: self.max_new,
            noise: self.noise,
            naive_mode: self.naive_mode,
            fixed_length: self.fixed_length,
        }
    }

    /// Every (mode, k) cell in report order.
    pub fn cells(&self) -> Vec<(SessionMode, usize)> {
        self.modes
            .iter()
            .flat_map(|&m| self.ks().map(move |k| (m, k)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    pub resamples: usize,
    /// System pairs tested for significance at every k.
    pub pairs: Vec<(SessionMode, SessionMode)>,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        EvaluateConfig {
            resamples: segfree::evaluation::DEFAULT_RESAMPLES,
            pairs: vec![
                (SessionMode::Segfree, SessionMode::Naive),
                (SessionMode::Segfree, SessionMode::SegmentedFixed),
            ],
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| DataError(format!("cannot read config {}: {e}", path.display())))?;
        let config: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| DataError(format!("invalid config {}: {e}", path.display())))?;
        Ok(config)
    }

    /// Rejects settings no stage can run with, before any file is touched.
    pub fn validate(&self) -> Result<()> {
        let s = &self.sweep;
        if s.k_min == 0 || s.k_min > s.k_max {
            bail!(DataError(format!(
                "k range {}..={} must satisfy 1 <= k_min <= k_max",
                s.k_min, s.k_max
            )));
        }
        if s.modes.is_empty() {
            bail!(DataError("sweep needs at least one mode".into()));
        }
        if !["train", "dev", "test"].contains(&s.split.as_str()) {
            bail!(DataError(format!("unknown split {:?}", s.split)));
        }
        if self.train.features.is_empty() {
            bail!(DataError("at least one feature is required".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).context("serialising the resolved config")
    }
}
