use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{select_boundary, FeatureSet, FeatureWeights};

/// Wait-k schedule over the words of the active chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WaitKPolicy {
    k: usize,
}

impl WaitKPolicy {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Configuration("wait-k requires k >= 1".into()));
        }
        Ok(WaitKPolicy { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Whether the next action is a WRITE. `read` and `written` count active
    /// chunk words only; once the source is exhausted writing is unconditional.
    pub fn should_write(&self, read: usize, written: usize, exhausted: bool) -> bool {
        exhausted || read >= written + self.k
    }
}

/// State of the active chunk when a segment is closed.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryQuery<'a> {
    pub chunk_source: &'a [String],
    /// The segment just closed, separator excluded.
    pub segment: &'a [String],
    /// Stream index of the first chunk word, i.e. source words consumed so far.
    pub chunk_start: usize,
    /// Target words committed before this segment.
    pub committed_target: usize,
}

/// Decides how many chunk words the closed segment translated.
pub trait BoundarySelector: Send {
    /// Returns â in `0..=chunk_source.len()`.
    fn select(&mut self, query: &BoundaryQuery<'_>) -> Result<usize>;
}

/// The log-linear memory mechanism.
#[derive(Debug, Clone)]
pub struct LogLinearSelector {
    features: FeatureSet,
    weights: FeatureWeights,
}

impl LogLinearSelector {
    pub fn new(features: FeatureSet, weights: FeatureWeights) -> Result<Self> {
        if features.len() != weights.len() {
            return Err(Error::Configuration(format!(
                "{} features but {} weights",
                features.len(),
                weights.len()
            )));
        }
        Ok(LogLinearSelector { features, weights })
    }
}

impl BoundarySelector for LogLinearSelector {
    fn select(&mut self, q: &BoundaryQuery<'_>) -> Result<usize> {
        if q.chunk_source.is_empty() {
            return Ok(0);
        }
        let scores = self.features.score(q.chunk_source, q.segment)?;
        select_boundary(&scores, &self.weights)
    }
}

/// How the naive offset reads the target length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NaiveMode {
    /// Total committed target length mapped to a stream position.
    #[default]
    Cumulative,
    /// Length of the closed segment only.
    PerSegment,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaiveOffsetConfig {
    pub r: f64,
    pub mode: NaiveMode,
}

impl NaiveOffsetConfig {
    pub fn new(r: f64, mode: NaiveMode) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::Configuration(format!("length ratio {r} must be positive")));
        }
        Ok(NaiveOffsetConfig { r, mode })
    }
}

/// clamp(⌊y_total / r⌋ − consumed, 0, chunk_len)
pub fn naive_boundary(y_total: usize, r: f64, consumed: usize, chunk_len: usize) -> usize {
    let position = (y_total as f64 / r).floor() as usize;
    position.saturating_sub(consumed).min(chunk_len)
}

#[derive(Debug, Clone)]
pub struct NaiveSelector {
    config: NaiveOffsetConfig,
}

impl NaiveSelector {
    pub fn new(config: NaiveOffsetConfig) -> Self {
        NaiveSelector { config }
    }
}

impl BoundarySelector for NaiveSelector {
    fn select(&mut self, q: &BoundaryQuery<'_>) -> Result<usize> {
        let len = q.chunk_source.len();
        Ok(match self.config.mode {
            NaiveMode::Cumulative => naive_boundary(
                q.committed_target + q.segment.len(),
                self.config.r,
                q.chunk_start,
                len,
            ),
            NaiveMode::PerSegment => naive_boundary(q.segment.len(), self.config.r, 0, len),
        })
    }
}

/// Selects the first gold sentence end past the chunk start.
#[derive(Debug, Clone)]
pub struct OracleSelector {
    ends: Vec<usize>,
}

impl OracleSelector {
    /// `ends` are exclusive stream positions of sentence ends.
    pub fn new(ends: Vec<usize>) -> Result<Self> {
        if ends.windows(2).any(|w| w[0] >= w[1]) || ends.first() == Some(&0) {
            return Err(Error::Configuration(
                "gold boundaries must be positive and strictly increasing".into(),
            ));
        }
        Ok(OracleSelector { ends })
    }
}

impl BoundarySelector for OracleSelector {
    fn select(&mut self, q: &BoundaryQuery<'_>) -> Result<usize> {
        let len = q.chunk_source.len();
        Ok(self
            .ends
            .iter()
            .find(|&&e| e > q.chunk_start)
            .map_or(len, |e| (e - q.chunk_start).min(len)))
    }
}
