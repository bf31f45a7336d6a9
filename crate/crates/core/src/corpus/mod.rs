//! Training and evaluation data: documents, history samples, prefix
//! augmentation, normalisation and the synthetic language.

mod io;
mod synthetic;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::BoundaryTrainingSample;
use crate::stream::{is_sep, DEFAULT_HISTORY_WORDS, SEP};

pub use io::{read_boundaries, read_document, read_documents, write_boundaries, write_document};
pub use synthetic::{generate_synthetic_corpus, GrammarConfig, SyntheticCorpus, SyntheticLanguage};

/// Characters removed from the source side: `. , ; : ! ? " ( )`, the em dash
/// and the ellipsis. Each becomes a space, so `a—b` yields two words.
pub const SOURCE_PUNCTUATION: &[char] = &['.', ',', ';', ':', '!', '?', '"', '(', ')', '—', '…'];

/// Lowercases, drops [`SOURCE_PUNCTUATION`] and splits on whitespace.
pub fn normalize_source(text: &str) -> Vec<String> {
    text.to_lowercase()
        .replace(SOURCE_PUNCTUATION, " ")
        .split_whitespace()
        .map(String::from)
        .collect()
}

pub type SentencePair = (Vec<String>, Vec<String>);

/// A talk or video: sentence pairs in discourse order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub sentence_pairs: Vec<SentencePair>,
}

impl Document {
    pub fn new(id: impl Into<String>, sentence_pairs: Vec<SentencePair>) -> Result<Self> {
        if sentence_pairs.is_empty() {
            return Err(Error::Configuration("a document needs at least one sentence".into()));
        }
        Ok(Document {
            id: id.into(),
            sentence_pairs,
        })
    }

    /// Unsegmented source stream.
    pub fn source_stream(&self) -> Vec<String> {
        self.sentence_pairs.iter().flat_map(|(s, _)| s.clone()).collect()
    }

    /// Reference target sentences.
    pub fn references(&self) -> Vec<Vec<String>> {
        self.sentence_pairs.iter().map(|(_, t)| t.clone()).collect()
    }

    /// Exclusive stream positions of the sentence ends (empty sentences skipped).
    pub fn sentence_ends(&self) -> Vec<usize> {
        let mut end = 0;
        let mut out = Vec::new();
        for (s, _) in &self.sentence_pairs {
            if !s.is_empty() {
                end += s.len();
                out.push(end);
            }
        }
        out
    }
}

/// A sentence pair with its streaming history prepended on both sides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub source: Vec<String>,
    pub target: Vec<String>,
    /// Leading source tokens (separators included) that belong to the history.
    pub history_source_len: usize,
    pub history_target_len: usize,
}

impl TrainingSample {
    pub fn current_source(&self) -> &[String] {
        &self.source[self.history_source_len..]
    }

    pub fn current_target(&self) -> &[String] {
        &self.target[self.history_target_len..]
    }

    /// History size in words, separators excluded, as (source, target).
    pub fn history_words(&self) -> (usize, usize) {
        let count = |t: &[String]| t.iter().filter(|w| !is_sep(w)).count();
        (
            count(&self.source[..self.history_source_len]),
            count(&self.target[..self.history_target_len]),
        )
    }
}

/// One sample per sentence. The history holds the nearest previous sentences,
/// each closed by a separator, as long as neither side exceeds `cap` words.
pub fn build_history_samples(doc: &Document, cap: usize) -> Result<Vec<TrainingSample>> {
    if cap == 0 {
        return Err(Error::Configuration("history cap must be positive".into()));
    }
    let pairs = &doc.sentence_pairs;
    let mut out = Vec::with_capacity(pairs.len());
    for i in 0..pairs.len() {
        let (mut src_words, mut tgt_words) = (0, 0);
        let mut first = i;
        while first > 0 {
            let (s, t) = &pairs[first - 1];
            if src_words + s.len() > cap || tgt_words + t.len() > cap {
                break;
            }
            src_words += s.len();
            tgt_words += t.len();
            first -= 1;
        }
        let mut source = Vec::new();
        let mut target = Vec::new();
        for (s, t) in &pairs[first..i] {
            source.extend(s.iter().cloned());
            source.push(SEP.to_string());
            target.extend(t.iter().cloned());
            target.push(SEP.to_string());
        }
        let (history_source_len, history_target_len) = (source.len(), target.len());
        source.extend(pairs[i].0.iter().cloned());
        target.extend(pairs[i].1.iter().cloned());
        out.push(TrainingSample {
            source,
            target,
            history_source_len,
            history_target_len,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrefixCoupling {
    /// Target prefix length follows the source prefix proportionally.
    #[default]
    Proportional,
    /// Both lengths drawn independently.
    Independent,
}

/// max(1, round(|y|·ℓ_s/|x|))
pub fn coupled_target_length(source_len: usize, target_len: usize, source_prefix: usize) -> usize {
    let l = (target_len as f64 * source_prefix as f64 / source_len as f64).round() as usize;
    l.max(1)
}

/// Cuts the current sentence to the given prefix lengths; history is kept.
pub fn prefix_sample(sample: &TrainingSample, source_prefix: usize, target_prefix: usize) -> Result<TrainingSample> {
    let (xs, ys) = (sample.current_source().len(), sample.current_target().len());
    if source_prefix == 0 || source_prefix > xs || target_prefix == 0 || target_prefix > ys {
        return Err(Error::Domain(format!(
            "prefix ({source_prefix}, {target_prefix}) invalid for a ({xs}, {ys}) sentence"
        )));
    }
    let mut out = sample.clone();
    out.source.truncate(sample.history_source_len + source_prefix);
    out.target.truncate(sample.history_target_len + target_prefix);
    Ok(out)
}

/// One randomly prefixed copy of `sample`.
pub fn prefix_augment<R: Rng + ?Sized>(
    sample: &TrainingSample,
    rng: &mut R,
    coupling: PrefixCoupling,
) -> Result<TrainingSample> {
    let (xs, ys) = (sample.current_source().len(), sample.current_target().len());
    if xs == 0 || ys == 0 {
        return Err(Error::Domain("prefix augmentation needs a non-empty sentence".into()));
    }
    let ls = rng.gen_range(1..=xs);
    let lt = match coupling {
        PrefixCoupling::Proportional => coupled_target_length(xs, ys, ls),
        PrefixCoupling::Independent => rng.gen_range(1..=ys),
    };
    prefix_sample(sample, ls, lt)
}

/// Originals followed by one prefixed copy of each; sentences empty on either
/// side are not prefixed.
pub fn augment_corpus<R: Rng + ?Sized>(
    samples: &[TrainingSample],
    rng: &mut R,
    coupling: PrefixCoupling,
) -> Result<Vec<TrainingSample>> {
    let mut out = samples.to_vec();
    for s in samples {
        if !s.current_source().is_empty() && !s.current_target().is_empty() {
            out.push(prefix_augment(s, rng, coupling)?);
        }
    }
    Ok(out)
}

/// Removes source separators, as the segmentation-free model never sees them.
pub fn strip_source_sep(sample: &TrainingSample) -> TrainingSample {
    let history_source_len = sample.source[..sample.history_source_len]
        .iter()
        .filter(|t| !is_sep(t))
        .count();
    TrainingSample {
        source: sample.source.iter().filter(|t| !is_sep(t)).cloned().collect(),
        target: sample.target.clone(),
        history_source_len,
        history_target_len: sample.history_target_len,
    }
}

/// History samples for every document, prefix-augmented, with source
/// separators stripped: the training set of the segmentation-free model.
pub fn segfree_training_set<R: Rng + ?Sized>(
    docs: &[Document],
    rng: &mut R,
    coupling: PrefixCoupling,
) -> Result<Vec<TrainingSample>> {
    let mut samples = Vec::new();
    for d in docs {
        samples.extend(build_history_samples(d, DEFAULT_HISTORY_WORDS)?);
    }
    Ok(augment_corpus(&samples, rng, coupling)?
        .iter()
        .map(strip_source_sep)
        .collect())
}

/// Median of |y|/|x| over sentence pairs with a non-empty source.
pub fn median_length_ratio(docs: &[Document]) -> Result<f64> {
    let mut ratios: Vec<f64> = docs
        .iter()
        .flat_map(|d| &d.sentence_pairs)
        .filter(|(s, _)| !s.is_empty())
        .map(|(s, t)| t.len() as f64 / s.len() as f64)
        .collect();
    if ratios.is_empty() {
        return Err(Error::InsufficientData("no sentence pairs for the length ratio".into()));
    }
    ratios.sort_by(f64::total_cmp);
    let n = ratios.len();
    Ok(if n % 2 == 1 {
        ratios[n / 2]
    } else {
        (ratios[n / 2 - 1] + ratios[n / 2]) / 2.0
    })
}

/// All sentence pairs with a non-empty source, for the reverse model.
pub fn sentence_pairs(docs: &[Document]) -> Vec<SentencePair> {
    docs.iter()
        .flat_map(|d| d.sentence_pairs.iter().cloned())
        .filter(|(s, _)| !s.is_empty())
        .collect()
}

/// (|y|, |x|) per sentence, for the Gaussian length feature.
pub fn length_samples(docs: &[Document]) -> Vec<(usize, usize)> {
    sentence_pairs(docs)
        .iter()
        .map(|(s, t)| (t.len(), s.len()))
        .collect()
}

/// Boundary samples whose chunk runs past the sentence end into the next
/// sentence, the way a wait-k reader sees it when the separator is emitted.
/// The look-ahead cycles through 0..=max_lookahead words.
pub fn boundary_samples(docs: &[Document], max_lookahead: usize) -> Result<Vec<BoundaryTrainingSample>> {
    let mut out = Vec::new();
    let mut cycle = 0usize;
    for d in docs {
        let pairs = &d.sentence_pairs;
        for (i, (s, t)) in pairs.iter().enumerate() {
            if s.is_empty() {
                continue;
            }
            let want = cycle % (max_lookahead + 1);
            cycle += 1;
            let lookahead: Vec<String> = pairs[i + 1..]
                .iter()
                .flat_map(|(s, _)| s.iter().cloned())
                .take(want)
                .collect();
            out.push(BoundaryTrainingSample::with_lookahead(s.clone(), lookahead, t.clone())?);
        }
    }
    Ok(out)
}
