use std::path::{Path, PathBuf};

use segfree::policy::SessionMode;

/// Fixed file layout under the output root; each stage reads what the
/// previous one wrote here.
#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn data(&self) -> PathBuf {
        self.root.join("data")
    }

    pub fn lexicon(&self) -> PathBuf {
        self.data().join("lexicon.tsv")
    }

    pub fn split(&self, name: &str) -> PathBuf {
        self.data().join(name)
    }

    pub fn boundaries(&self, split: &str) -> PathBuf {
        self.data().join(format!("{split}.boundaries.tsv"))
    }

    pub fn models(&self) -> PathBuf {
        self.root.join("models")
    }

    pub fn training_log(&self) -> PathBuf {
        self.models().join("training_log.json")
    }

    pub fn traces(&self) -> PathBuf {
        self.root.join("traces")
    }

    pub fn trace_cell(&self, mode: SessionMode, k: usize) -> PathBuf {
        self.traces().join(mode.name()).join(format!("k{k:02}"))
    }

    pub fn trace(&self, mode: SessionMode, k: usize, video: &str) -> PathBuf {
        self.trace_cell(mode, k).join(format!("{video}.jsonl"))
    }

    pub fn failures(&self) -> PathBuf {
        self.traces().join("failures.json")
    }

    pub fn eval(&self) -> PathBuf {
        self.root.join("eval")
    }

    pub fn report(&self) -> PathBuf {
        self.eval().join("report.json")
    }

    pub fn curve(&self) -> PathBuf {
        self.eval().join("curve.csv")
    }

    /// Resolved config snapshot written by a stage.
    pub fn stage_config(&self, stage: &str) -> PathBuf {
        self.root.join(format!("{stage}.config.toml"))
    }
}
