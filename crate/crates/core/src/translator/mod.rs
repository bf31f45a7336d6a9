//! Incremental decoding: the decoder interface, the deterministic lexical
//! toy translator used for desk-scale runs, and speculative beam search.

mod beam;
mod lexicon;

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::stream::{is_sep, SEP};

pub use beam::{speculative_beam_search, Hypothesis};
pub use lexicon::{ToyLexicon, MAX_FERTILITY};

/// Target token the toy translator writes when asked for output it has no
/// source support for.
pub const UNK: &str = "<unk>";

/// Next-token distribution over the target vocabulary plus the separator.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    entries: Vec<(String, f64)>,
}

impl Distribution {
    /// Entries with zero mass may be omitted, except the separator which is
    /// always present.
    pub fn new(mut entries: Vec<(String, f64)>) -> Result<Self> {
        if entries.iter().any(|(_, p)| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Domain("distribution has invalid probabilities".into()));
        }
        if !entries.iter().any(|(t, _)| is_sep(t)) {
            entries.push((SEP.to_string(), 0.0));
        }
        let total: f64 = entries.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("distribution sums to {total}")));
        }
        Ok(Distribution { entries })
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn prob(&self, token: &str) -> f64 {
        self.entries
            .iter()
            .find(|(t, _)| t == token)
            .map(|(_, p)| *p)
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    /// Most probable token; ties go to the lexicographically smallest.
    pub fn argmax(&self) -> &str {
        let mut best = &self.entries[0];
        for e in &self.entries[1..] {
            if e.1 > best.1 || (e.1 == best.1 && e.0 < best.0) {
                best = e;
            }
        }
        &best.0
    }
}

pub trait IncrementalDecoder: Send + Sync {
    /// Distribution of the next target token given the full source context and
    /// the target context produced so far (separators included).
    fn next_distribution(&self, source: &[String], target: &[String]) -> Result<Distribution>;
}

/// When the toy translator closes a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentRule {
    /// After translating a terminator word: the segmentation-free model.
    Terminator,
    /// After covering a separator present in the source: a model trained on
    /// segmented input.
    SourceMarker,
}

/// Deterministic monotone lexical translator.
///
/// The coverage pointer is recovered from the contexts alone: the target
/// context (without separators and `<unk>`) is matched against the lexical
/// translation of the source context, allowing for leading target words whose
/// source was dropped and leading source words whose translation was dropped.
/// Mass `1 - noise` goes to the next token of that translation, the rest is
/// spread uniformly over the remaining vocabulary.
#[derive(Debug, Clone)]
pub struct ToyTranslator {
    lexicon: ToyLexicon,
    rule: SegmentRule,
    noise: f64,
    vocabulary: Vec<String>,
    known_targets: HashSet<String>,
}

struct Expected<'a> {
    token: &'a str,
    word: usize,
    last_of_word: bool,
}

impl ToyTranslator {
    pub fn new(lexicon: ToyLexicon, rule: SegmentRule, noise: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&noise) {
            return Err(Error::Configuration(format!("noise {noise} outside [0, 1)")));
        }
        let mut vocabulary = lexicon.target_vocabulary();
        vocabulary.push(UNK.to_string());
        vocabulary.push(SEP.to_string());
        let known_targets = vocabulary.iter().cloned().collect();
        Ok(ToyTranslator {
            lexicon,
            rule,
            noise,
            vocabulary,
            known_targets,
        })
    }

    pub fn lexicon(&self) -> &ToyLexicon {
        &self.lexicon
    }

    pub fn rule(&self) -> SegmentRule {
        self.rule
    }

    /// Target vocabulary including `<unk>` and the separator.
    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    fn expected<'a>(&'a self, words: &[&'a String]) -> Result<Vec<Expected<'a>>> {
        let mut out = Vec::new();
        for (i, w) in words.iter().enumerate() {
            let targets = self
                .lexicon
                .translate_word(w)
                .ok_or_else(|| Error::DecoderState(format!("source word {w:?} not in lexicon")))?;
            for (j, t) in targets.iter().enumerate() {
                out.push(Expected {
                    token: t,
                    word: i,
                    last_of_word: j + 1 == targets.len(),
                });
            }
        }
        Ok(out)
    }

    /// Number of expected tokens covered by `produced`.
    fn coverage(expected: &[Expected<'_>], produced: &[&String]) -> usize {
        for skip in 0..=produced.len() {
            let tail = &produced[skip..];
            if tail.len() > expected.len() {
                continue;
            }
            for start in 0..=expected.len() - tail.len() {
                if expected[start..start + tail.len()]
                    .iter()
                    .zip(tail)
                    .all(|(e, p)| e.token == p.as_str())
                {
                    return start + tail.len();
                }
            }
        }
        0
    }

    fn check_target(&self, target: &[String]) -> Result<()> {
        match target.iter().find(|t| !self.known_targets.contains(*t)) {
            Some(t) => Err(Error::DecoderState(format!(
                "target token {t:?} cannot be produced by the lexicon"
            ))),
            None => Ok(()),
        }
    }

    /// The token the translator writes next.
    pub fn next_token(&self, source: &[String], target: &[String]) -> Result<String> {
        self.check_target(target)?;
        let at_segment_start = target.last().map_or(true, |t| is_sep(t));
        let out_of_support = || {
            if at_segment_start {
                SEP.to_string()
            } else {
                UNK.to_string()
            }
        };
        match self.rule {
            SegmentRule::Terminator => {
                let words: Vec<&String> = source.iter().filter(|w| !is_sep(w)).collect();
                let expected = self.expected(&words)?;
                let produced: Vec<&String> = target
                    .iter()
                    .filter(|t| !is_sep(t) && t.as_str() != UNK)
                    .collect();
                let m = Self::coverage(&expected, &produced);
                if m > 0 {
                    let last = &expected[m - 1];
                    let closed_after = target
                        .iter()
                        .rposition(|t| !is_sep(t) && t.as_str() != UNK)
                        .map_or(false, |p| target[p + 1..].iter().any(|t| is_sep(t)));
                    if last.last_of_word
                        && self.lexicon.is_terminator(words[last.word])
                        && !closed_after
                    {
                        return Ok(SEP.to_string());
                    }
                }
                Ok(expected
                    .get(m)
                    .map(|e| e.token.to_string())
                    .unwrap_or_else(out_of_support))
            }
            SegmentRule::SourceMarker => {
                let mut segments: Vec<(Vec<&String>, bool)> = vec![(Vec::new(), false)];
                for w in source {
                    if is_sep(w) {
                        segments.last_mut().expect("non-empty").1 = true;
                        segments.push((Vec::new(), false));
                    } else {
                        segments.last_mut().expect("non-empty").0.push(w);
                    }
                }
                let closed_targets = target.iter().filter(|t| is_sep(t)).count();
                let Some((words, closed)) = segments.get(closed_targets) else {
                    return Ok(out_of_support());
                };
                let partial_start = target.iter().rposition(|t| is_sep(t)).map_or(0, |p| p + 1);
                let produced: Vec<&String> = target[partial_start..]
                    .iter()
                    .filter(|t| t.as_str() != UNK)
                    .collect();
                let expected = self.expected(words)?;
                let m = Self::coverage(&expected, &produced);
                if let Some(e) = expected.get(m) {
                    return Ok(e.token.to_string());
                }
                if *closed {
                    return Ok(SEP.to_string());
                }
                Ok(out_of_support())
            }
        }
    }
}

impl IncrementalDecoder for ToyTranslator {
    fn next_distribution(&self, source: &[String], target: &[String]) -> Result<Distribution> {
        let top = self.next_token(source, target)?;
        if self.noise == 0.0 {
            return Distribution::new(vec![(top, 1.0)]);
        }
        let rest = self.noise / (self.vocabulary.len() - 1) as f64;
        Distribution::new(
            self.vocabulary
                .iter()
                .map(|t| {
                    let p = if *t == top { 1.0 - self.noise } else { rest };
                    (t.clone(), p)
                })
                .collect(),
        )
    }
}
