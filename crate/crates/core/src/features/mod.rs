//! Memory-mechanism model: feature functions over active-chunk positions,
//! the log-linear posterior and boundary choice, and their trainers.

mod linreg;
mod loglinear;
mod reverse;

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use linreg::{fit_linreg, gaussian_log_score, gaussian_score, LinRegParams, DEFAULT_SIGMA_MIN};
pub use loglinear::{
    position_posterior, select_boundary, train_weights_on_scores, FeatureScores, FeatureWeights,
    PositionPosterior, WeightTraining, WeightTrainingConfig,
};
pub use reverse::{
    reverse_mt_score, train_reverse_model, ReverseLexicalModel, ReverseNormalization,
    ReverseTraining, DEFAULT_PROB_FLOOR,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    ReverseMt,
    Linreg,
}

impl FeatureKind {
    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::ReverseMt => "reverse_mt",
            FeatureKind::Linreg => "linreg",
        }
    }
}

impl std::str::FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reverse_mt" => Ok(FeatureKind::ReverseMt),
            "linreg" => Ok(FeatureKind::Linreg),
            other => Err(Error::Configuration(format!("unknown feature {other:?}"))),
        }
    }
}

/// An ordered, configured set of feature functions.
///
/// The target side handed to [`FeatureSet::score`] is the current segment
/// only; history targets never enter the features.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    kinds: Vec<FeatureKind>,
    reverse: Option<ReverseLexicalModel>,
    linreg: Option<LinRegParams>,
    prob_floor: f64,
    normalization: ReverseNormalization,
}

impl FeatureSet {
    pub fn new(
        kinds: Vec<FeatureKind>,
        reverse: Option<ReverseLexicalModel>,
        linreg: Option<LinRegParams>,
    ) -> Result<Self> {
        if kinds.is_empty() {
            return Err(Error::Configuration("feature set is empty".into()));
        }
        for (i, k) in kinds.iter().enumerate() {
            if kinds[..i].contains(k) {
                return Err(Error::Configuration(format!("duplicate feature {}", k.name())));
            }
        }
        if kinds.contains(&FeatureKind::ReverseMt) && reverse.is_none() {
            return Err(Error::Configuration("reverse_mt feature needs a reverse model".into()));
        }
        if kinds.contains(&FeatureKind::Linreg) && linreg.is_none() {
            return Err(Error::Configuration("linreg feature needs fitted parameters".into()));
        }
        Ok(FeatureSet {
            kinds,
            reverse,
            linreg,
            prob_floor: DEFAULT_PROB_FLOOR,
            normalization: ReverseNormalization::None,
        })
    }

    pub fn with_prob_floor(mut self, floor: f64) -> Self {
        self.prob_floor = floor;
        self
    }

    pub fn with_reverse_normalization(mut self, normalization: ReverseNormalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn reverse_normalization(&self) -> ReverseNormalization {
        self.normalization
    }

    pub fn kinds(&self) -> &[FeatureKind] {
        &self.kinds
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    /// Scores every chunk position for the segment `target`.
    pub fn score(&self, source: &[String], target: &[String]) -> Result<FeatureScores> {
        if source.is_empty() {
            return Err(Error::Domain("cannot score an empty chunk".into()));
        }
        let rows = self
            .kinds
            .iter()
            .map(|kind| match kind {
                FeatureKind::ReverseMt => self
                    .reverse
                    .as_ref()
                    .expect("checked in new")
                    .prefix_log_scores(source, target, self.prob_floor, self.normalization),
                FeatureKind::Linreg => {
                    let params = self.linreg.as_ref().expect("checked in new");
                    (1..=source.len())
                        .map(|a| gaussian_log_score(params, a, target.len()))
                        .collect()
                }
            })
            .collect();
        FeatureScores::from_log(rows)
    }
}

/// One classification sample: the chunk, the segment it produced, and the
/// 1-based position of the last translated source word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryTrainingSample {
    pub source: Vec<String>,
    pub target: Vec<String>,
    pub label: usize,
}

impl BoundaryTrainingSample {
    /// Sentence-pair sample; the correct class is the full source length.
    pub fn new(source: Vec<String>, target: Vec<String>) -> Result<Self> {
        let label = source.len();
        Self::with_lookahead(source, Vec::new(), target).map(|s| {
            debug_assert_eq!(s.label, label);
            s
        })
    }

    /// Sentence-pair sample whose chunk also holds `lookahead` words read past
    /// the sentence end; the label stays at the sentence's last word.
    pub fn with_lookahead(
        mut sentence: Vec<String>,
        lookahead: Vec<String>,
        target: Vec<String>,
    ) -> Result<Self> {
        if sentence.is_empty() {
            return Err(Error::Domain("boundary sample needs a non-empty source".into()));
        }
        let label = sentence.len();
        sentence.extend(lookahead);
        Ok(BoundaryTrainingSample {
            source: sentence,
            target,
            label,
        })
    }
}

/// Trains λ on boundary samples scored by `features`.
pub fn train_weights(
    samples: &[BoundaryTrainingSample],
    features: &FeatureSet,
    config: &WeightTrainingConfig,
) -> Result<WeightTraining> {
    let scored = samples
        .iter()
        .map(|s| Ok((features.score(&s.source, &s.target)?, s.label)))
        .collect::<Result<Vec<_>>>()?;
    train_weights_on_scores(&scored, config)
}

/// Fraction of samples whose selected boundary equals the label.
pub fn boundary_accuracy(
    samples: &[BoundaryTrainingSample],
    features: &FeatureSet,
    weights: &FeatureWeights,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no samples to score".into()));
    }
    let mut hits = 0usize;
    for s in samples {
        let scores = features.score(&s.source, &s.target)?;
        if select_boundary(&scores, weights)? == s.label {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples.len() as f64)
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    format_version: u32,
    #[serde(flatten)]
    body: T,
}

pub(crate) fn save<T: Serialize>(path: &Path, format: &str, body: T) -> Result<()> {
    let env = Envelope {
        format: format.to_string(),
        format_version: MODEL_FORMAT_VERSION,
        body,
    };
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(file, &env)?;
    Ok(())
}

pub(crate) fn load<T: DeserializeOwned>(path: &Path, format: &str) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    let env: Envelope<T> = serde_json::from_str(&text)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    if env.format != format {
        return Err(Error::parse(
            path.display().to_string(),
            format!("expected format {format}, found {}", env.format),
        ));
    }
    if env.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::parse(
            path.display().to_string(),
            format!("unsupported format_version {}", env.format_version),
        ));
    }
    Ok(env.body)
}

const REVERSE_FORMAT: &str = "segfree.reverse_lexical_model";
const LINREG_FORMAT: &str = "segfree.linreg";
const WEIGHTS_FORMAT: &str = "segfree.feature_weights";

#[derive(Serialize, Deserialize)]
struct WeightsBody {
    features: Vec<FeatureKind>,
    lambda: Vec<f64>,
    #[serde(default)]
    reverse_normalization: ReverseNormalization,
}

impl ReverseLexicalModel {
    pub fn save(&self, path: &Path) -> Result<()> {
        save(path, REVERSE_FORMAT, self.to_body())
    }

    pub fn load(path: &Path) -> Result<Self> {
        ReverseLexicalModel::from_body(load(path, REVERSE_FORMAT)?)
    }
}

impl LinRegParams {
    pub fn save(&self, path: &Path) -> Result<()> {
        save(path, LINREG_FORMAT, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let p: LinRegParams = load(path, LINREG_FORMAT)?;
        LinRegParams::new(p.theta_mu, p.theta_sigma, p.sigma_min)
    }
}

/// Weights plus the feature order and scoring mode they were fitted under.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredWeights {
    pub features: Vec<FeatureKind>,
    pub weights: FeatureWeights,
    pub reverse_normalization: ReverseNormalization,
}

pub fn save_weights(path: &Path, stored: &StoredWeights) -> Result<()> {
    save(
        path,
        WEIGHTS_FORMAT,
        WeightsBody {
            features: stored.features.clone(),
            lambda: stored.weights.as_slice().to_vec(),
            reverse_normalization: stored.reverse_normalization,
        },
    )
}

pub fn load_weights(path: &Path) -> Result<StoredWeights> {
    let body: WeightsBody = load(path, WEIGHTS_FORMAT)?;
    if body.features.len() != body.lambda.len() {
        return Err(Error::parse(
            path.display().to_string(),
            "feature list and lambda lengths differ",
        ));
    }
    Ok(StoredWeights {
        features: body.features,
        weights: FeatureWeights::new(body.lambda)?,
        reverse_normalization: body.reverse_normalization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn fixture() -> FeatureSet {
        let corpus: Vec<_> = [("a b", "A B"), ("b c", "B C"), ("c a", "C A"), ("a c", "A C")]
            .iter()
            .map(|(s, t)| (toks(s), toks(t)))
            .collect();
        let rev = train_reverse_model(&corpus, 10).unwrap().model;
        let lin = fit_linreg(&[(2, 2), (3, 3), (4, 4)], DEFAULT_SIGMA_MIN).unwrap();
        FeatureSet::new(vec![FeatureKind::ReverseMt, FeatureKind::Linreg], Some(rev), Some(lin))
            .unwrap()
    }

    #[test]
    fn feature_set_requires_its_models() {
        assert!(FeatureSet::new(vec![FeatureKind::ReverseMt], None, None).is_err());
        assert!(FeatureSet::new(vec![], None, None).is_err());
        let lin = LinRegParams::new(1.0, 1.0, 0.5).unwrap();
        assert!(
            FeatureSet::new(vec![FeatureKind::Linreg, FeatureKind::Linreg], None, Some(lin))
                .is_err()
        );
    }

    #[test]
    fn scores_pick_translated_prefix() {
        let fs = fixture();
        let scores = fs.score(&toks("a b c a"), &toks("A B")).unwrap();
        assert_eq!(scores.positions(), 4);
        assert_eq!(select_boundary(&scores, &FeatureWeights::ones(2)).unwrap(), 2);
    }

    #[test]
    fn lookahead_sample_keeps_sentence_label() {
        let s = BoundaryTrainingSample::with_lookahead(toks("a b"), toks("c"), toks("A B")).unwrap();
        assert_eq!(s.label, 2);
        assert_eq!(s.source.len(), 3);
        assert_eq!(BoundaryTrainingSample::new(toks("a b"), toks("A")).unwrap().label, 2);
        assert!(BoundaryTrainingSample::new(vec![], toks("A")).is_err());
    }

    #[test]
    fn model_files_round_trip_and_check_format() {
        let dir = std::env::temp_dir().join(format!("segfree-features-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let lin = LinRegParams::new(0.7, 1.3, 0.5).unwrap();
        lin.save(&dir.join("lin.json")).unwrap();
        assert_eq!(LinRegParams::load(&dir.join("lin.json")).unwrap(), lin);

        let w = FeatureWeights::new(vec![0.5, -2.0]).unwrap();
        let kinds = [FeatureKind::ReverseMt, FeatureKind::Linreg];
        let stored = StoredWeights {
            features: kinds.to_vec(),
            weights: w,
            reverse_normalization: ReverseNormalization::AlignmentPrior,
        };
        save_weights(&dir.join("w.json"), &stored).unwrap();
        assert_eq!(load_weights(&dir.join("w.json")).unwrap(), stored);

        assert!(LinRegParams::load(&dir.join("w.json")).is_err());
        let text = std::fs::read_to_string(dir.join("lin.json")).unwrap();
        assert!(text.contains("\"format_version\": 1"));
        std::fs::remove_dir_all(&dir).ok();
    }
}
