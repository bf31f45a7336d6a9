//! Session orchestration: wait-k scheduling, boundary mechanisms and the
//! segmented baselines.

mod mechanism;
mod segmenter;
mod session;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use mechanism::{
    naive_boundary, BoundaryQuery, BoundarySelector, LogLinearSelector, NaiveMode,
    NaiveOffsetConfig, NaiveSelector, OracleSelector, WaitKPolicy,
};
pub use segmenter::{oracle_segmenter, FixedLengthSegmenter, OracleSegmenter, Segmenter};
pub use session::{
    run_segfree_session, run_segmented_session, Session, SessionAbort, SessionConfig, Step,
};

/// System variants compared by the experiment harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionMode {
    Segfree,
    Naive,
    SegmentedOracle,
    SegmentedFixed,
}

impl SessionMode {
    pub const ALL: [SessionMode; 4] = [
        SessionMode::Segfree,
        SessionMode::Naive,
        SessionMode::SegmentedOracle,
        SessionMode::SegmentedFixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SessionMode::Segfree => "segfree",
            SessionMode::Naive => "naive",
            SessionMode::SegmentedOracle => "segmented-oracle",
            SessionMode::SegmentedFixed => "segmented-fixed",
        }
    }

    pub fn is_segmented(self) -> bool {
        matches!(self, SessionMode::SegmentedOracle | SessionMode::SegmentedFixed)
    }
}

impl fmt::Display for SessionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SessionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        SessionMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Configuration(format!("unknown mode {s:?}")))
    }
}
