//! Target→source lexical model (IBM Model 1 with a NULL word) and the
//! prefix-likelihood feature built on it.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lexical factors below this are clamped so scores stay strictly positive.
pub const DEFAULT_PROB_FLOOR: f64 = 1e-10;

/// Conditional table `t(source | target)`, with row 0 reserved for NULL.
#[derive(Debug, Clone, PartialEq)]
pub struct ReverseLexicalModel {
    source_vocab: Vec<String>,
    source_index: HashMap<String, usize>,
    target_vocab: Vec<String>,
    target_index: HashMap<String, usize>,
    /// Row-major `[target_row][source]`; row 0 is NULL, row i+1 is target_vocab[i].
    table: Vec<f64>,
}

/// Output of EM training.
#[derive(Debug, Clone)]
pub struct ReverseTraining {
    pub model: ReverseLexicalModel,
    /// Corpus log-likelihood at the initial model and after each iteration.
    pub log_likelihood: Vec<f64>,
}

fn index_of(vocab: &mut Vec<String>, index: &mut HashMap<String, usize>, word: &str) -> usize {
    if let Some(&i) = index.get(word) {
        return i;
    }
    let i = vocab.len();
    vocab.push(word.to_string());
    index.insert(word.to_string(), i);
    i
}

impl ReverseLexicalModel {
    fn uniform(source_vocab: Vec<String>, target_vocab: Vec<String>) -> Self {
        let source_index = source_vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        let target_index = target_vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        let n_src = source_vocab.len();
        let rows = target_vocab.len() + 1;
        ReverseLexicalModel {
            source_vocab,
            source_index,
            target_vocab,
            target_index,
            table: vec![1.0 / n_src as f64; rows * n_src],
        }
    }

    fn n_src(&self) -> usize {
        self.source_vocab.len()
    }

    fn rows(&self) -> usize {
        self.target_vocab.len() + 1
    }

    fn cell(&self, row: usize, src: usize) -> f64 {
        self.table[row * self.n_src() + src]
    }

    fn row_of(&self, target: &str) -> Option<usize> {
        self.target_index.get(target).map(|i| i + 1)
    }

    /// `t(source | target)`; `None` as target means NULL. Unknown words give 0.
    pub fn prob(&self, source: &str, target: Option<&str>) -> f64 {
        let Some(&s) = self.source_index.get(source) else {
            return 0.0;
        };
        let row = match target {
            None => 0,
            Some(t) => match self.row_of(t) {
                Some(r) => r,
                None => return 0.0,
            },
        };
        self.cell(row, s)
    }

    pub fn source_vocab(&self) -> &[String] {
        &self.source_vocab
    }

    pub fn target_vocab(&self) -> &[String] {
        &self.target_vocab
    }

    /// Largest deviation of any row sum from one.
    pub fn max_row_deviation(&self) -> f64 {
        let n = self.n_src();
        (0..self.rows())
            .map(|r| (self.table[r * n..(r + 1) * n].iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `Σ_{e ∈ y ∪ NULL} t(f|e)` for one source word.
    fn lexical_sum(&self, source: &str, target_rows: &[usize]) -> f64 {
        match self.source_index.get(source) {
            Some(&s) => target_rows.iter().map(|&r| self.cell(r, s)).sum(),
            None => 0.0,
        }
    }

    /// Rows for NULL plus every known target word, and the `l + 1` denominator.
    /// Unknown target words contribute nothing but still count in `l`.
    fn rows_for(&self, target: &[String]) -> (Vec<usize>, usize) {
        let known: Vec<usize> = std::iter::once(0)
            .chain(target.iter().filter_map(|t| self.row_of(t)))
            .collect();
        (known, target.len() + 1)
    }

    /// Natural-log prefix likelihoods `log p(x_1^a | y)` for a = 1..=|x|,
    /// each lexical factor floored at `floor`.
    pub fn prefix_log_scores(
        &self,
        source: &[String],
        target: &[String],
        floor: f64,
        normalization: ReverseNormalization,
    ) -> Vec<f64> {
        let (rows, denom) = self.rows_for(target);
        let denom = match normalization {
            ReverseNormalization::None => denom as f64,
            ReverseNormalization::AlignmentPrior => 1.0,
        };
        let mut acc = 0.0;
        source
            .iter()
            .map(|s| {
                let factor = self.lexical_sum(s, &rows) / denom;
                acc += factor.max(floor).ln();
                acc
            })
            .collect()
    }

    fn log_likelihood(&self, corpus: &[(Vec<usize>, Vec<usize>)]) -> f64 {
        let n = self.n_src();
        let mut ll = 0.0;
        for (src, rows) in corpus {
            for &f in src {
                let sum: f64 = rows.iter().map(|&r| self.table[r * n + f]).sum();
                ll += (sum / rows.len() as f64).ln();
            }
        }
        ll
    }
}

/// Runs `iterations` rounds of Model-1 EM from a uniform table.
///
/// Corpus pairs are `(source tokens, target tokens)`; the model estimates
/// `t(source | target)`.
pub fn train_reverse_model(
    corpus: &[(Vec<String>, Vec<String>)],
    iterations: usize,
) -> Result<ReverseTraining> {
    if corpus.is_empty() {
        return Err(Error::Configuration("reverse model needs a non-empty corpus".into()));
    }
    if iterations == 0 {
        return Err(Error::Configuration("EM needs at least one iteration".into()));
    }
    let (mut sv, mut si, mut tv, mut ti) = (Vec::new(), HashMap::new(), Vec::new(), HashMap::new());
    let mut indexed = Vec::with_capacity(corpus.len());
    for (src, tgt) in corpus {
        let s: Vec<usize> = src.iter().map(|w| index_of(&mut sv, &mut si, w)).collect();
        let t: Vec<usize> = std::iter::once(0)
            .chain(tgt.iter().map(|w| index_of(&mut tv, &mut ti, w) + 1))
            .collect();
        indexed.push((s, t));
    }
    if sv.is_empty() {
        return Err(Error::Configuration("reverse model corpus has no source words".into()));
    }

    let mut model = ReverseLexicalModel::uniform(sv, tv);
    let n = model.n_src();
    let rows = model.rows();
    let mut log_likelihood = vec![model.log_likelihood(&indexed)];
    let mut counts = vec![0.0; rows * n];
    let mut totals = vec![0.0; rows];
    for _ in 0..iterations {
        counts.iter_mut().for_each(|c| *c = 0.0);
        totals.iter_mut().for_each(|c| *c = 0.0);
        for (src, tgt_rows) in &indexed {
            for &f in src {
                let denom: f64 = tgt_rows.iter().map(|&r| model.table[r * n + f]).sum();
                if denom <= 0.0 {
                    continue;
                }
                for &r in tgt_rows {
                    let c = model.table[r * n + f] / denom;
                    counts[r * n + f] += c;
                    totals[r] += c;
                }
            }
        }
        for r in 0..rows {
            if totals[r] > 0.0 {
                for f in 0..n {
                    model.table[r * n + f] = counts[r * n + f] / totals[r];
                }
            }
        }
        log_likelihood.push(model.log_likelihood(&indexed));
    }
    Ok(ReverseTraining {
        model,
        log_likelihood,
    })
}

/// `p(x_1^a | y)` under Model 1 without length normalisation, each factor floored.
pub fn reverse_mt_score(
    model: &ReverseLexicalModel,
    source: &[String],
    target: &[String],
    a: usize,
    floor: f64,
) -> Result<f64> {
    if a == 0 || a > source.len() {
        return Err(Error::BoundaryDomain {
            position: a,
            min: 1,
            max: source.len(),
        });
    }
    let scores = model.prefix_log_scores(&source[..a], target, floor, ReverseNormalization::None);
    Ok(scores[a - 1].exp())
}

/// How prefix likelihoods of different lengths are made comparable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReverseNormalization {
    /// Plain Model-1 likelihood. Every extra word costs at least log(|y|+1),
    /// even when it is a perfect translation.
    #[default]
    None,
    /// Each factor is multiplied by |y|+1, cancelling the uniform alignment
    /// prior: a well explained word then costs about nothing while an
    /// unexplained one still pays its full lexical penalty.
    AlignmentPrior,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct ReverseModelBody {
    pub source_vocab: Vec<String>,
    pub target_vocab: Vec<String>,
    /// `(target, source, t(source|target))`; target `null` is the NULL word. Zero entries omitted.
    pub entries: Vec<(Option<String>, String, f64)>,
}

impl ReverseLexicalModel {
    pub(crate) fn to_body(&self) -> ReverseModelBody {
        let n = self.n_src();
        let mut entries = Vec::new();
        for r in 0..self.rows() {
            let target = if r == 0 {
                None
            } else {
                Some(self.target_vocab[r - 1].clone())
            };
            for f in 0..n {
                let p = self.table[r * n + f];
                if p > 0.0 {
                    entries.push((target.clone(), self.source_vocab[f].clone(), p));
                }
            }
        }
        ReverseModelBody {
            source_vocab: self.source_vocab.clone(),
            target_vocab: self.target_vocab.clone(),
            entries,
        }
    }

    pub(crate) fn from_body(body: ReverseModelBody) -> Result<Self> {
        let mut model = ReverseLexicalModel::uniform(body.source_vocab, body.target_vocab);
        if model.n_src() == 0 {
            return Err(Error::parse("reverse model", "empty source vocabulary"));
        }
        model.table.iter_mut().for_each(|c| *c = 0.0);
        let n = model.n_src();
        for (target, source, p) in body.entries {
            let row = match &target {
                None => 0,
                Some(t) => model
                    .row_of(t)
                    .ok_or_else(|| Error::parse("reverse model", format!("unknown target {t}")))?,
            };
            let &f = model
                .source_index
                .get(&source)
                .ok_or_else(|| Error::parse("reverse model", format!("unknown source {source}")))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::parse("reverse model", format!("probability {p} out of range")));
            }
            model.table[row * n + f] = p;
        }
        Ok(model)
    }
}
