use std::ops::Range;

use crate::error::{Error, Result};

/// A hypothesis stream cut into one span per reference segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedHypothesis {
    pub spans: Vec<Range<usize>>,
    pub segments: Vec<Vec<String>>,
    pub total_edit_distance: usize,
}

impl AlignedHypothesis {
    /// Interior cut points, one per pair of adjacent segments.
    pub fn boundaries(&self) -> Vec<usize> {
        self.spans.iter().skip(1).map(|r| r.start).collect()
    }

    pub fn token_count(&self) -> usize {
        self.spans.last().map_or(0, |r| r.end)
    }
}

/// Word-level Levenshtein distance with unit costs.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let next = (row[j + 1] + 1).min(row[j] + 1).min(diag + usize::from(x != y));
            diag = row[j + 1];
            row[j + 1] = next;
        }
    }
    row[b.len()]
}

/// Splits `hyp` into `refs.len()` contiguous segments minimising the summed
/// edit distance to the references. Among optimal splits the one with the
/// earliest boundaries (lexicographically) wins.
pub fn realign(hyp: &[String], refs: &[Vec<String>]) -> Result<AlignedHypothesis> {
    if refs.is_empty() {
        return Err(Error::Configuration("re-alignment needs at least one reference".into()));
    }
    let h = hyp.len();
    let concat: Vec<&String> = refs.iter().flatten().collect();
    let mut starts = Vec::with_capacity(refs.len() + 1);
    let mut acc = 0;
    for r in refs {
        starts.push(acc);
        acc += r.len();
    }
    starts.push(acc);

    // The optimum over segmentations equals the edit distance against the
    // concatenated references, so suffix distances at segment starts give the
    // cost-to-go of every (segment, hyp position) state.
    let n = refs.len();
    let mut cost_to_go = vec![Vec::new(); n + 1];
    // past the last segment nothing may remain
    cost_to_go[n] = vec![usize::MAX / 2; h + 1];
    cost_to_go[n][h] = 0;
    let mut col: Vec<usize> = (0..=h).rev().collect();
    let mut seg = n;
    let mut r = concat.len();
    loop {
        while seg > 0 && starts[seg - 1] == r {
            seg -= 1;
            cost_to_go[seg] = col.clone();
        }
        if r == 0 {
            break;
        }
        r -= 1;
        let mut next = vec![0; h + 1];
        next[h] = col[h] + 1;
        for p in (0..h).rev() {
            next[p] = (next[p + 1] + 1)
                .min(col[p] + 1)
                .min(col[p + 1] + usize::from(hyp[p] != *concat[r]));
        }
        col = next;
    }

    let mut spans = Vec::with_capacity(refs.len());
    let mut p = 0;
    for (s, reference) in refs.iter().enumerate() {
        let target = cost_to_go[s][p];
        // distances from hyp[p..q] to this reference, for every q
        let mut row: Vec<usize> = (0..=reference.len()).collect();
        let mut q = p;
        loop {
            if row[reference.len()] + cost_to_go[s + 1][q] == target {
                break;
            }
            assert!(q < h, "re-alignment backtrace left the hypothesis");
            let mut diag = row[0];
            row[0] += 1;
            for (j, y) in reference.iter().enumerate() {
                let v = (row[j + 1] + 1).min(row[j] + 1).min(diag + usize::from(hyp[q] != *y));
                diag = row[j + 1];
                row[j + 1] = v;
            }
            q += 1;
        }
        spans.push(p..q);
        p = q;
    }
    debug_assert_eq!(p, h);
    Ok(AlignedHypothesis {
        segments: spans.iter().map(|r| hyp[r.clone()].to_vec()).collect(),
        total_edit_distance: cost_to_go[0][0],
        spans,
    })
}
