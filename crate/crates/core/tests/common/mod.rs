#![allow(dead_code)]

use segfree::trace::{SessionTrace, TraceEvent};

/// Replays a segmentation-free trace and reports every WRITE issued with
/// fewer than `k` unanswered active-chunk words while input remained.
pub fn waitk_violations(trace: &SessionTrace, k: usize, source_len: usize) -> Vec<String> {
    let (mut read, mut chunk_start, mut written) = (0usize, 0usize, 0usize);
    let mut out = Vec::new();
    for (i, e) in trace.events.iter().enumerate() {
        match e {
            TraceEvent::Read { .. } => read += 1,
            TraceEvent::Write { token, .. } => {
                let lead = (read - chunk_start) as isize - written as isize;
                if read < source_len && lead < k as isize {
                    out.push(format!("event {i} ({token}): lead {lead} < {k}"));
                }
                written += 1;
            }
            TraceEvent::Commit { source_end, .. } => {
                chunk_start = *source_end;
                written = 0;
            }
            _ => {}
        }
    }
    out
}

/// Non-decreasing delays, none past J.
pub fn delays_well_formed(trace: &SessionTrace, source_len: usize) -> bool {
    let g = trace.delays();
    g.windows(2).all(|w| w[0] <= w[1]) && g.iter().all(|&d| d <= source_len)
}

/// Textbook full-matrix Levenshtein distance, kept separate from the
/// library's rolling-row version.
pub fn levenshtein(a: &[String], b: &[String]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

/// Minimum summed edit distance over every split of `hyp` into
/// `refs.len()` contiguous segments, with the lexicographically smallest
/// optimal cut points.
pub fn brute_force_realign(hyp: &[String], refs: &[Vec<String>]) -> (usize, Vec<usize>) {
    let mut best: Option<(usize, Vec<usize>)> = None;
    let mut cuts = vec![0usize; refs.len().saturating_sub(1)];
    loop {
        let mut bounds = vec![0];
        bounds.extend(&cuts);
        bounds.push(hyp.len());
        let cost: usize = refs
            .iter()
            .enumerate()
            .map(|(i, r)| levenshtein(&hyp[bounds[i]..bounds[i + 1]], r))
            .sum();
        if best.as_ref().map_or(true, |(c, _)| cost < *c) {
            best = Some((cost, cuts.clone()));
        }
        // next non-decreasing cut vector in lexicographic order
        let mut i = cuts.len();
        loop {
            if i == 0 {
                return best.expect("at least one split");
            }
            i -= 1;
            if cuts[i] < hyp.len() {
                cuts[i] += 1;
                for j in i + 1..cuts.len() {
                    cuts[j] = cuts[i];
                }
                break;
            }
        }
    }
}
