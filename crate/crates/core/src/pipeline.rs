//! End-to-end glue shared by the command line and the experiment tests:
//! model training from documents, one simulated session per document, and
//! per-document scoring.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{boundary_samples, GrammarConfig, SyntheticLanguage, length_samples, median_length_ratio, sentence_pairs, Document};
use crate::error::{Error, Result};
use crate::evaluation::{
    average_lagging, bleu_from_stats, realign, segment_stats, AlignedHypothesis, CurvePoint,
    LatencyReport, QualityReport, SegmentStats,
};
use crate::features::{
    boundary_accuracy, fit_linreg, load_weights, save_weights, train_reverse_model, train_weights,
    FeatureKind, FeatureSet, FeatureWeights, LinRegParams, ReverseLexicalModel,
    ReverseNormalization, StoredWeights, WeightTrainingConfig, DEFAULT_SIGMA_MIN,
};
use crate::policy::{
    oracle_segmenter, run_segfree_session, run_segmented_session, BoundarySelector,
    FixedLengthSegmenter, LogLinearSelector, NaiveMode, NaiveOffsetConfig, NaiveSelector,
    SessionAbort, SessionConfig, SessionMode,
};
use crate::stream::{TokenStream, DEFAULT_HISTORY_WORDS};
use crate::trace::SessionTrace;
use crate::translator::{SegmentRule, ToyLexicon, ToyTranslator};

/// Pipeline stages that draw their own seed from the experiment seed.
/// Training and simulation are deterministic and take none.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Data,
    Evaluate,
}

/// SplitMix64 finaliser over the experiment seed and a per-stage tag, so
/// re-running one stage never shifts the randomness of another.
pub fn stage_seed(seed: u64, stage: Stage) -> u64 {
    let tag: u64 = match stage {
        Stage::Data => 0x6461_7461,
        Stage::Evaluate => 0x6576_616c,
    };
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub train_docs: usize,
    pub dev_docs: usize,
    pub test_docs: usize,
    pub sentences_per_doc: usize,
    pub grammar: GrammarConfig,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            train_docs: 100,
            dev_docs: 20,
            test_docs: 20,
            sentences_per_doc: 10,
            grammar: GrammarConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub lexicon: ToyLexicon,
    pub train: Vec<Document>,
    pub dev: Vec<Document>,
    pub test: Vec<Document>,
}

impl Splits {
    pub const NAMES: [&'static str; 3] = ["train", "dev", "test"];

    pub fn by_name(&self, name: &str) -> Option<&[Document]> {
        match name {
            "train" => Some(&self.train),
            "dev" => Some(&self.dev),
            "test" => Some(&self.test),
            _ => None,
        }
    }
}

/// One synthetic language and three disjoint document draws from it.
/// `data_seed` is usually `stage_seed(seed, Stage::Data)`.
pub fn generate_splits(data_seed: u64, config: &CorpusConfig) -> Result<Splits> {
    let language = SyntheticLanguage::new(data_seed, config.grammar.clone())?;
    let spd = config.sentences_per_doc;
    let draw = |offset: u64, prefix: &str, n: usize| {
        language.documents(data_seed.wrapping_add(offset), prefix, n, spd)
    };
    Ok(Splits {
        train: draw(1, "train", config.train_docs)?,
        dev: draw(2, "dev", config.dev_docs)?,
        test: draw(3, "test", config.test_docs)?,
        lexicon: language.lexicon().clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub features: Vec<FeatureKind>,
    pub em_iterations: usize,
    pub sigma_min: f64,
    /// Words past the sentence end in boundary samples cycle over 0..=this.
    pub max_lookahead: usize,
    /// Defaults to [`ReverseNormalization::AlignmentPrior`]: without it the
    /// per-word alignment prior outweighs the lexical evidence and the
    /// mechanism falls behind the naive offset on the synthetic language.
    pub reverse_normalization: ReverseNormalization,
    pub weights: WeightTrainingConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            features: vec![FeatureKind::ReverseMt, FeatureKind::Linreg],
            em_iterations: 10,
            sigma_min: DEFAULT_SIGMA_MIN,
            max_lookahead: 10,
            reverse_normalization: ReverseNormalization::AlignmentPrior,
            weights: WeightTrainingConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModels {
    pub reverse: ReverseLexicalModel,
    pub linreg: LinRegParams,
    pub kinds: Vec<FeatureKind>,
    pub weights: FeatureWeights,
    pub reverse_normalization: ReverseNormalization,
    /// Median target/source sentence length ratio, the naive offset.
    pub length_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub reverse_log_likelihood: Vec<f64>,
    pub theta_mu: f64,
    pub theta_sigma: f64,
    pub weights: Vec<f64>,
    pub weight_losses_first_last: (f64, f64),
    pub dev_boundary_accuracy: f64,
    pub length_ratio: f64,
}

const NAIVE_FORMAT: &str = "segfree.naive_offset";

#[derive(Serialize, Deserialize)]
struct NaiveBody {
    length_ratio: f64,
}

impl TrainedModels {
    pub const REVERSE_FILE: &'static str = "reverse.json";
    pub const LINREG_FILE: &'static str = "linreg.json";
    pub const WEIGHTS_FILE: &'static str = "weights.json";
    pub const NAIVE_FILE: &'static str = "naive.json";

    /// Writes the four model files into `dir`, creating it if needed.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.reverse.save(&dir.join(Self::REVERSE_FILE))?;
        self.linreg.save(&dir.join(Self::LINREG_FILE))?;
        save_weights(
            &dir.join(Self::WEIGHTS_FILE),
            &StoredWeights {
                features: self.kinds.clone(),
                weights: self.weights.clone(),
                reverse_normalization: self.reverse_normalization,
            },
        )?;
        crate::features::save(
            &dir.join(Self::NAIVE_FILE),
            NAIVE_FORMAT,
            NaiveBody {
                length_ratio: self.length_ratio,
            },
        )
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let stored = load_weights(&dir.join(Self::WEIGHTS_FILE))?;
        let naive: NaiveBody = crate::features::load(&dir.join(Self::NAIVE_FILE), NAIVE_FORMAT)?;
        let models = TrainedModels {
            reverse: ReverseLexicalModel::load(&dir.join(Self::REVERSE_FILE))?,
            linreg: LinRegParams::load(&dir.join(Self::LINREG_FILE))?,
            kinds: stored.features,
            weights: stored.weights,
            reverse_normalization: stored.reverse_normalization,
            length_ratio: naive.length_ratio,
        };
        LogLinearSelector::new(models.feature_set()?, models.weights.clone())?;
        NaiveOffsetConfig::new(models.length_ratio, NaiveMode::default())?;
        Ok(models)
    }

    pub fn feature_set(&self) -> Result<FeatureSet> {
        Ok(FeatureSet::new(
            self.kinds.clone(),
            Some(self.reverse.clone()),
            Some(self.linreg.clone()),
        )?
        .with_reverse_normalization(self.reverse_normalization))
    }
}

/// Reverse model and length feature on `train`, λ on `dev`.
pub fn train_models(
    train: &[Document],
    dev: &[Document],
    config: &TrainConfig,
) -> Result<(TrainedModels, TrainingSummary)> {
    let reverse = train_reverse_model(&sentence_pairs(train), config.em_iterations)?;
    let linreg = fit_linreg(&length_samples(train), config.sigma_min)?;
    let length_ratio = median_length_ratio(train)?;
    let features = FeatureSet::new(
        config.features.clone(),
        Some(reverse.model.clone()),
        Some(linreg.clone()),
    )?
    .with_reverse_normalization(config.reverse_normalization);
    let samples = boundary_samples(dev, config.max_lookahead)?;
    if samples.is_empty() {
        return Err(Error::InsufficientData("dev split has no sentences".into()));
    }
    let trained = train_weights(&samples, &features, &config.weights)?;
    let dev_boundary_accuracy = boundary_accuracy(&samples, &features, &trained.weights)?;
    let summary = TrainingSummary {
        reverse_log_likelihood: reverse.log_likelihood.clone(),
        theta_mu: linreg.theta_mu,
        theta_sigma: linreg.theta_sigma,
        weights: trained.weights.as_slice().to_vec(),
        weight_losses_first_last: (trained.losses[0], trained.final_loss()),
        dev_boundary_accuracy,
        length_ratio,
    };
    Ok((
        TrainedModels {
            reverse: reverse.model,
            linreg,
            kinds: config.features.clone(),
            weights: trained.weights,
            reverse_normalization: config.reverse_normalization,
            length_ratio,
        },
        summary,
    ))
}

/// One system configuration of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSpec {
    pub mode: SessionMode,
    pub k: usize,
    pub beam: usize,
    pub history_cap: usize,
    pub max_new: Option<usize>,
    pub noise: f64,
    pub naive_mode: NaiveMode,
    pub fixed_length: usize,
}

impl Default for SystemSpec {
    fn default() -> Self {
        SystemSpec {
            mode: SessionMode::Segfree,
            k: 1,
            beam: 4,
            history_cap: DEFAULT_HISTORY_WORDS,
            max_new: None,
            noise: 0.0,
            naive_mode: NaiveMode::Cumulative,
            fixed_length: 10,
        }
    }
}

impl SystemSpec {
    fn session_config(&self) -> Result<SessionConfig> {
        let mut c = SessionConfig::new(self.k)?;
        c.beam = self.beam;
        c.history_cap = self.history_cap;
        c.max_new = self.max_new;
        Ok(c)
    }
}

fn abort(error: Error) -> SessionAbort {
    SessionAbort {
        trace: SessionTrace::new(),
        error,
    }
}

/// Translates one document as a single unsegmented stream.
///
/// `models` is needed by the segmentation-free modes only.
pub fn simulate_document(
    doc: &Document,
    lexicon: &ToyLexicon,
    models: Option<&TrainedModels>,
    spec: &SystemSpec,
) -> Result<SessionTrace, SessionAbort> {
    let config = spec.session_config().map_err(abort)?;
    let source = TokenStream::closed_from(doc.source_stream()).map_err(abort)?;
    let rule = if spec.mode.is_segmented() {
        SegmentRule::SourceMarker
    } else {
        SegmentRule::Terminator
    };
    let decoder = ToyTranslator::new(lexicon.clone(), rule, spec.noise).map_err(abort)?;
    let need_models = || {
        models.ok_or_else(|| {
            abort(Error::Configuration(format!(
                "mode {} needs trained models",
                spec.mode
            )))
        })
    };
    match spec.mode {
        SessionMode::Segfree => {
            let m = need_models()?;
            let features = m.feature_set().map_err(abort)?;
            let selector = LogLinearSelector::new(features, m.weights.clone()).map_err(abort)?;
            run_segfree_session(&source, &decoder, config, Box::new(selector))
        }
        SessionMode::Naive => {
            let m = need_models()?;
            let cfg = NaiveOffsetConfig::new(m.length_ratio, spec.naive_mode).map_err(abort)?;
            run_segfree_session(&source, &decoder, config, Box::new(NaiveSelector::new(cfg)))
        }
        SessionMode::SegmentedOracle => {
            let seg = oracle_segmenter(source.len(), &doc.sentence_ends()).map_err(abort)?;
            run_segmented_session(&source, Box::new(seg), &decoder, config)
        }
        SessionMode::SegmentedFixed => {
            let seg = FixedLengthSegmenter::new(spec.fixed_length).map_err(abort)?;
            run_segmented_session(&source, Box::new(seg), &decoder, config)
        }
    }
}

/// Runs a segmentation-free session with a caller-supplied boundary selector.
pub fn simulate_with_selector<'a>(
    doc: &Document,
    decoder: &'a ToyTranslator,
    spec: &SystemSpec,
    selector: Box<dyn BoundarySelector + 'a>,
) -> Result<SessionTrace, SessionAbort> {
    let config = spec.session_config().map_err(abort)?;
    let source = TokenStream::closed_from(doc.source_stream()).map_err(abort)?;
    run_segfree_session(&source, decoder, config, selector)
}

/// Scores of one document under one system.
#[derive(Debug, Clone)]
pub struct DocumentScore {
    pub aligned: AlignedHypothesis,
    pub stats: SegmentStats,
    pub al: f64,
    /// Commits whose end falls on a gold sentence end, and all commits.
    pub boundary_hits: usize,
    pub commits: usize,
}

impl DocumentScore {
    pub fn boundary_accuracy(&self) -> Option<f64> {
        (self.commits > 0).then(|| self.boundary_hits as f64 / self.commits as f64)
    }
}

pub fn score_document(doc: &Document, trace: &SessionTrace) -> Result<DocumentScore> {
    let refs = doc.references();
    let aligned = realign(&trace.hypothesis(), &refs)?;
    let al = average_lagging(trace, &aligned)?;
    let mut stats = SegmentStats::default();
    for (h, r) in aligned.segments.iter().zip(&refs) {
        stats += segment_stats(h, r);
    }
    let gold = doc.sentence_ends();
    let ends = trace.commit_ends();
    let boundary_hits = ends.iter().filter(|e| gold.binary_search(e).is_ok()).count();
    Ok(DocumentScore {
        aligned,
        stats,
        al,
        boundary_hits,
        commits: ends.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoResult {
    pub id: String,
    pub al: f64,
    pub bleu: f64,
    pub edit_distance: usize,
    pub commits: usize,
    pub boundary_accuracy: Option<f64>,
}

/// Aggregate metrics of one (system, k) cell over the videos it completed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemReport {
    pub system: String,
    pub k: usize,
    pub quality: QualityReport,
    pub mean_al: f64,
    /// Mean over videos with at least one commit.
    pub boundary_accuracy: Option<f64>,
    pub videos: Vec<VideoResult>,
    /// Videos without a usable trace, in input order.
    pub missing: Vec<String>,
}

impl SystemReport {
    pub fn curve_point(&self) -> CurvePoint {
        CurvePoint {
            system: self.system.clone(),
            k: self.k,
            al: self.mean_al,
            bleu: self.quality.bleu,
        }
    }
}

/// Reduces per-document scores in the given order; the result does not
/// depend on how the scores were computed or scheduled.
pub fn summarize_system(
    system: &str,
    k: usize,
    scored: &[(&Document, &DocumentScore)],
    missing: Vec<String>,
) -> Result<SystemReport> {
    if scored.is_empty() {
        return Err(Error::InsufficientData(format!(
            "{system} k={k}: no video was translated"
        )));
    }
    let mut total = SegmentStats::default();
    let mut videos = Vec::with_capacity(scored.len());
    for (doc, score) in scored {
        total += score.stats;
        videos.push(VideoResult {
            id: doc.id.clone(),
            al: score.al,
            bleu: bleu_from_stats(&score.stats)?.bleu,
            edit_distance: score.aligned.total_edit_distance,
            commits: score.commits,
            boundary_accuracy: score.boundary_accuracy(),
        });
    }
    let latency = LatencyReport::new(videos.iter().map(|v| v.al).collect())?;
    let accuracies: Vec<f64> = videos.iter().filter_map(|v| v.boundary_accuracy).collect();
    let boundary_accuracy =
        (!accuracies.is_empty()).then(|| accuracies.iter().sum::<f64>() / accuracies.len() as f64);
    Ok(SystemReport {
        system: system.to_string(),
        k,
        quality: bleu_from_stats(&total)?,
        mean_al: latency.mean_al,
        boundary_accuracy,
        videos,
        missing,
    })
}
