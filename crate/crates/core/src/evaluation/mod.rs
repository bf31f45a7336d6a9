//! Re-alignment, BLEU, stream-level latency, paired bootstrap and curve output.

mod bleu;
mod latency;
mod realign;

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bleu::{bleu, bleu_from_stats, segment_stats, QualityReport, SegmentStats, MAX_ORDER, ZERO_COUNT_EPSILON};
pub use latency::{average_lagging, average_lagging_from_delays, LatencyReport};
pub use realign::{edit_distance, realign, AlignedHypothesis};

pub const DEFAULT_RESAMPLES: usize = 1000;

/// Paired bootstrap over segments. Returns the fraction of resamples whose
/// BLEU difference does not have the sign of the full-corpus difference;
/// identical systems give 1.
pub fn bootstrap_significance(
    hyp_a: &[Vec<String>],
    hyp_b: &[Vec<String>],
    refs: &[Vec<String>],
    resamples: usize,
    seed: u64,
) -> Result<f64> {
    let n = refs.len();
    if hyp_a.len() != n || hyp_b.len() != n {
        return Err(Error::Configuration("segment counts differ".into()));
    }
    if n < 2 {
        return Err(Error::InsufficientData(
            "bootstrap needs at least two segments".into(),
        ));
    }
    if resamples == 0 {
        return Err(Error::Configuration("resample count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<Vec<usize>> = (0..resamples)
        .map(|_| (0..n).map(|_| rng.gen_range(0..n)).collect())
        .collect();
    bootstrap_with_indices(hyp_a, hyp_b, refs, &draws)
}

/// [`bootstrap_significance`] with explicit resample index sequences.
pub fn bootstrap_with_indices(
    hyp_a: &[Vec<String>],
    hyp_b: &[Vec<String>],
    refs: &[Vec<String>],
    draws: &[Vec<usize>],
) -> Result<f64> {
    let stats = |hyp: &[Vec<String>]| -> Vec<SegmentStats> {
        hyp.iter().zip(refs).map(|(h, r)| segment_stats(h, r)).collect()
    };
    let (sa, sb) = (stats(hyp_a), stats(hyp_b));
    let corpus = |s: &[SegmentStats], idx: &mut dyn Iterator<Item = usize>| -> Result<f64> {
        let mut total = SegmentStats::default();
        for i in idx {
            total += s[i];
        }
        // a resample may hold only empty references; it cannot favour either side
        if total.ref_len == 0 {
            return Ok(0.0);
        }
        Ok(bleu_from_stats(&total)?.bleu)
    };
    let full = corpus(&sa, &mut (0..refs.len()))? - corpus(&sb, &mut (0..refs.len()))?;
    if full == 0.0 {
        return Ok(1.0);
    }
    let mut flips = 0usize;
    for d in draws {
        if d.iter().any(|&i| i >= refs.len()) {
            return Err(Error::Domain("resample index out of range".into()));
        }
        let delta = corpus(&sa, &mut d.iter().copied())? - corpus(&sb, &mut d.iter().copied())?;
        if delta * full.signum() <= 0.0 {
            flips += 1;
        }
    }
    Ok(flips as f64 / draws.len() as f64)
}

/// One point of a quality/latency curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub system: String,
    pub k: usize,
    pub al: f64,
    pub bleu: f64,
}

/// Writes `system,k,AL,BLEU` rows sorted by AL (then system, then k).
pub fn write_curve<W: Write>(points: &[CurvePoint], mut out: W) -> Result<()> {
    let mut rows: Vec<&CurvePoint> = points.iter().collect();
    rows.sort_by(|a, b| {
        a.al.total_cmp(&b.al)
            .then_with(|| a.system.cmp(&b.system))
            .then(a.k.cmp(&b.k))
    });
    writeln!(out, "system,k,AL,BLEU")?;
    for p in rows {
        writeln!(out, "{},{},{:.4},{:.4}", p.system, p.k, p.al, p.bleu)?;
    }
    Ok(())
}

pub fn emit_curve(points: &[CurvePoint], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_curve(points, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}
