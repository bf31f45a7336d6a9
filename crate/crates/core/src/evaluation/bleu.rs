use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;
/// Stands in for a zero match count so the geometric mean stays defined.
pub const ZERO_COUNT_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    /// Corpus BLEU on the 0–100 scale.
    pub bleu: f64,
    pub ngram_precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
}

/// Sufficient statistics of one segment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SegmentStats {
    pub matches: [usize; MAX_ORDER],
    pub totals: [usize; MAX_ORDER],
    /// Reference n-gram counts per order.
    pub ref_totals: [usize; MAX_ORDER],
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl std::ops::AddAssign for SegmentStats {
    fn add_assign(&mut self, o: Self) {
        for n in 0..MAX_ORDER {
            self.matches[n] += o.matches[n];
            self.totals[n] += o.totals[n];
            self.ref_totals[n] += o.ref_totals[n];
        }
        self.hyp_len += o.hyp_len;
        self.ref_len += o.ref_len;
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for w in tokens.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

/// Clipped n-gram matches of one hypothesis segment against its reference.
pub fn segment_stats(hyp: &[String], reference: &[String]) -> SegmentStats {
    let mut s = SegmentStats {
        hyp_len: hyp.len(),
        ref_len: reference.len(),
        ..Default::default()
    };
    for n in 1..=MAX_ORDER {
        let h = ngram_counts(hyp, n);
        let r = ngram_counts(reference, n);
        s.totals[n - 1] = hyp.len().saturating_sub(n - 1);
        s.ref_totals[n - 1] = reference.len().saturating_sub(n - 1);
        s.matches[n - 1] = h
            .iter()
            .map(|(g, c)| (*c).min(r.get(g).copied().unwrap_or(0)))
            .sum();
    }
    s
}

/// BLEU-4 from aggregated statistics. An empty hypothesis scores zero.
pub fn bleu_from_stats(total: &SegmentStats) -> Result<QualityReport> {
    if total.ref_len == 0 {
        return Err(Error::Configuration("BLEU needs a non-empty reference corpus".into()));
    }
    let mut precisions = [0.0; MAX_ORDER];
    for n in 0..MAX_ORDER {
        if total.totals[n] == 0 && total.ref_totals[n] == 0 {
            // an order too long for both sides carries no evidence
            precisions[n] = 1.0;
            continue;
        }
        let m = if total.matches[n] == 0 {
            ZERO_COUNT_EPSILON
        } else {
            total.matches[n] as f64
        };
        precisions[n] = m / total.totals[n].max(1) as f64;
    }
    let bp = if total.hyp_len == 0 {
        0.0
    } else if total.hyp_len < total.ref_len {
        (1.0 - total.ref_len as f64 / total.hyp_len as f64).exp()
    } else {
        1.0
    };
    let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / MAX_ORDER as f64;
    Ok(QualityReport {
        bleu: 100.0 * bp * log_mean.exp(),
        ngram_precisions: precisions,
        brevity_penalty: bp,
        hyp_len: total.hyp_len,
        ref_len: total.ref_len,
    })
}

/// Corpus-level BLEU-4 over aligned segments.
pub fn bleu(hyp_segments: &[Vec<String>], ref_segments: &[Vec<String>]) -> Result<QualityReport> {
    if hyp_segments.len() != ref_segments.len() {
        return Err(Error::Configuration(format!(
            "{} hypothesis segments for {} references",
            hyp_segments.len(),
            ref_segments.len()
        )));
    }
    let mut total = SegmentStats::default();
    for (h, r) in hyp_segments.iter().zip(ref_segments) {
        total += segment_stats(h, r);
    }
    bleu_from_stats(&total)
}
