use std::cmp::Ordering;
use std::collections::HashMap;

use super::{Distribution, IncrementalDecoder};
use crate::error::{Error, Result};
use crate::stream::is_sep;

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    /// Committed prefix followed by the speculated continuation.
    pub tokens: Vec<String>,
    /// Sum of log-probabilities of the continuation.
    pub log_score: f64,
}

impl Hypothesis {
    fn finished(&self, prefix_len: usize) -> bool {
        self.tokens.len() > prefix_len && self.tokens.last().is_some_and(|t| is_sep(t))
    }

    /// Tokens beyond the committed prefix.
    pub fn continuation(&self, prefix_len: usize) -> &[String] {
        &self.tokens[prefix_len..]
    }
}

/// Higher score first; equal scores fall back to token order so results never
/// depend on expansion order.
fn rank(a: &Hypothesis, b: &Hypothesis) -> Ordering {
    b.log_score
        .partial_cmp(&a.log_score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.tokens.cmp(&b.tokens))
}

struct Cached<'d> {
    decoder: &'d dyn IncrementalDecoder,
    source: &'d [String],
    seen: HashMap<Vec<String>, Distribution>,
}

impl Cached<'_> {
    fn get(&mut self, target: &[String]) -> Result<&Distribution> {
        if !self.seen.contains_key(target) {
            let d = self.decoder.next_distribution(self.source, target)?;
            self.seen.insert(target.to_vec(), d);
        }
        Ok(&self.seen[target])
    }
}

/// Fixed-width beam search continuing `committed_prefix` by up to `max_new`
/// tokens; a hypothesis stops once it emits the separator.
///
/// Scores are unnormalised sums of log-probabilities. The greedy continuation
/// is carried alongside the beam, so the returned hypothesis never scores
/// below greedy decoding. The caller decides how much of it to commit.
pub fn speculative_beam_search(
    decoder: &dyn IncrementalDecoder,
    source: &[String],
    committed_prefix: &[String],
    beam: usize,
    max_new: usize,
) -> Result<Hypothesis> {
    if beam == 0 || max_new == 0 {
        return Err(Error::Configuration("beam and max_new must be positive".into()));
    }
    let prefix_len = committed_prefix.len();
    let mut cache = Cached {
        decoder,
        source,
        seen: HashMap::new(),
    };
    let start = Hypothesis {
        tokens: committed_prefix.to_vec(),
        log_score: 0.0,
    };
    let mut live = vec![start.clone()];
    let mut finished: Vec<Hypothesis> = Vec::new();
    let mut greedy = start;

    for _ in 0..max_new {
        if live.is_empty() && greedy.finished(prefix_len) {
            break;
        }
        let mut candidates = Vec::new();
        for hyp in &live {
            let dist = cache.get(&hyp.tokens)?;
            for (token, p) in dist.entries() {
                if *p > 0.0 {
                    let mut tokens = hyp.tokens.clone();
                    tokens.push(token.clone());
                    candidates.push(Hypothesis {
                        tokens,
                        log_score: hyp.log_score + p.ln(),
                    });
                }
            }
        }
        candidates.sort_by(rank);
        candidates.truncate(beam);
        live.clear();
        for c in candidates {
            if c.finished(prefix_len) {
                finished.push(c);
            } else {
                live.push(c);
            }
        }

        if !greedy.finished(prefix_len) {
            let dist = cache.get(&greedy.tokens)?;
            let token = dist.argmax().to_string();
            let p = dist.prob(&token);
            if p <= 0.0 {
                return Err(Error::Domain("decoder returned an empty distribution".into()));
            }
            greedy.tokens.push(token);
            greedy.log_score += p.ln();
        }
    }

    finished
        .into_iter()
        .chain(live)
        .chain(std::iter::once(greedy))
        .filter(|h| h.tokens.len() > prefix_len)
        .min_by(rank)
        .ok_or_else(|| Error::Domain("beam search produced no continuation".into()))
}
