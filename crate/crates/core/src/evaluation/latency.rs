use serde::{Deserialize, Serialize};

use super::realign::AlignedHypothesis;
use crate::error::{Error, Result};
use crate::trace::SessionTrace;

/// AL over a whole stream from its delays, `source_len` = J.
///
/// r = I/J, τ = first i with g(i) = J (I if none), and
/// AL = (1/τ) Σ_{i≤τ} g(i) − (i−1)/r.
pub fn average_lagging_from_delays(delays: &[usize], source_len: usize) -> Result<f64> {
    if delays.is_empty() || source_len == 0 {
        return Err(Error::InsufficientData(
            "average lagging needs output and input tokens".into(),
        ));
    }
    let rate = delays.len() as f64 / source_len as f64;
    let tau = delays
        .iter()
        .position(|&g| g >= source_len)
        .map_or(delays.len(), |i| i + 1);
    let sum: f64 = delays[..tau]
        .iter()
        .enumerate()
        .map(|(i, &g)| g as f64 - i as f64 / rate)
        .sum();
    Ok(sum / tau as f64)
}

/// Stream-level AL of one video. The trace must hold exactly one delay per
/// re-aligned hypothesis token; J is the number of source tokens read.
pub fn average_lagging(trace: &SessionTrace, aligned: &AlignedHypothesis) -> Result<f64> {
    let delays = trace.delays();
    if delays.len() != aligned.token_count() {
        return Err(Error::TraceMismatch(format!(
            "{} delays for {} hypothesis tokens",
            delays.len(),
            aligned.token_count()
        )));
    }
    if delays.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::TraceMismatch("delays decrease".into()));
    }
    let source_len = trace.source_read();
    if delays.last().is_some_and(|&g| g > source_len) {
        return Err(Error::TraceMismatch("delay beyond the source length".into()));
    }
    average_lagging_from_delays(&delays, source_len)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub per_video_al: Vec<f64>,
    pub mean_al: f64,
}

impl LatencyReport {
    pub fn new(per_video_al: Vec<f64>) -> Result<Self> {
        if per_video_al.is_empty() {
            return Err(Error::InsufficientData("no videos to average".into()));
        }
        let mean_al = per_video_al.iter().sum::<f64>() / per_video_al.len() as f64;
        Ok(LatencyReport {
            per_video_al,
            mean_al,
        })
    }
}
