//! Log-linear position model over the active chunk.
//!
//! Every feature scores each chunk position `a` (1-based, relative to the
//! chunk start). The posterior is `p(a) ∝ Π_f h_f(a)^λ_f`; the selected
//! boundary maximises `Σ_f λ_f log h_f(a)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-feature, per-position scores, held as natural logs so that tiny
/// densities never underflow to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScores {
    log: Vec<Vec<f64>>,
}

impl FeatureScores {
    /// Builds from raw scores; every entry must be strictly positive and finite.
    pub fn from_values(rows: Vec<Vec<f64>>) -> Result<Self> {
        for (f, row) in rows.iter().enumerate() {
            for (a, &v) in row.iter().enumerate() {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Domain(format!(
                        "feature {f} position {} has non-positive score {v}",
                        a + 1
                    )));
                }
            }
        }
        Self::from_log(
            rows.into_iter()
                .map(|r| r.into_iter().map(f64::ln).collect())
                .collect(),
        )
    }

    /// Builds from log scores; entries must be finite.
    pub fn from_log(log: Vec<Vec<f64>>) -> Result<Self> {
        let width = log.first().map(Vec::len).unwrap_or(0);
        if log.is_empty() || width == 0 {
            return Err(Error::Domain(
                "feature scores need at least one feature and one position".into(),
            ));
        }
        for (f, row) in log.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Domain(format!(
                    "feature {f} has {} positions, expected {width}",
                    row.len()
                )));
            }
            if let Some(a) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Domain(format!(
                    "feature {f} position {} has non-positive score",
                    a + 1
                )));
            }
        }
        Ok(FeatureScores { log })
    }

    pub fn feature_count(&self) -> usize {
        self.log.len()
    }

    /// Number of chunk positions.
    pub fn positions(&self) -> usize {
        self.log[0].len()
    }

    pub fn log_row(&self, feature: usize) -> &[f64] {
        &self.log[feature]
    }

    /// `Σ_f λ_f log h_f(a)` for every position.
    pub fn combined(&self, weights: &FeatureWeights) -> Result<Vec<f64>> {
        if weights.len() != self.feature_count() {
            return Err(Error::Domain(format!(
                "{} weights for {} features",
                weights.len(),
                self.feature_count()
            )));
        }
        let mut out = vec![0.0; self.positions()];
        for (row, &lambda) in self.log.iter().zip(weights.as_slice()) {
            for (acc, &h) in out.iter_mut().zip(row) {
                *acc += lambda * h;
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureWeights(Vec<f64>);

impl FeatureWeights {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.iter().any(|l| !l.is_finite()) {
            return Err(Error::Domain("feature weights must be finite".into()));
        }
        Ok(FeatureWeights(lambda))
    }

    pub fn ones(n: usize) -> Self {
        FeatureWeights(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionPosterior(Vec<f64>);

impl PositionPosterior {
    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    /// Probability of 1-based position `a`.
    pub fn at(&self, a: usize) -> f64 {
        self.0[a - 1]
    }

    /// Most probable 1-based position; ties go to the largest position.
    pub fn argmax(&self) -> usize {
        argmax_last(&self.0) + 1
    }
}

/// Index of the maximum, preferring the last index among ties.
pub(crate) fn argmax_last(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v >= values[best] {
            best = i;
        }
    }
    best
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

pub fn position_posterior(
    scores: &FeatureScores,
    weights: &FeatureWeights,
) -> Result<PositionPosterior> {
    Ok(PositionPosterior(softmax(&scores.combined(weights)?)))
}

/// 1-based boundary position â; ties break towards the largest position.
pub fn select_boundary(scores: &FeatureScores, weights: &FeatureWeights) -> Result<usize> {
    Ok(argmax_last(&scores.combined(weights)?) + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightTrainingConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub init: f64,
}

impl Default for WeightTrainingConfig {
    fn default() -> Self {
        WeightTrainingConfig {
            learning_rate: 0.1,
            epochs: 200,
            init: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightTraining {
    pub weights: FeatureWeights,
    /// Mean cross-entropy before the first update and after every epoch.
    pub losses: Vec<f64>,
}

impl WeightTraining {
    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("at least the initial loss")
    }
}

/// Mean cross-entropy of the labels and its gradient with respect to λ.
fn loss_and_gradient(samples: &[(FeatureScores, usize)], weights: &FeatureWeights) -> (f64, Vec<f64>) {
    let mut loss = 0.0;
    let mut grad = vec![0.0; weights.len()];
    for (scores, label) in samples {
        let combined = scores
            .combined(weights)
            .expect("shapes validated before training");
        let post = softmax(&combined);
        loss -= post[label - 1].ln();
        for (f, g) in grad.iter_mut().enumerate() {
            let row = scores.log_row(f);
            let expected: f64 = row.iter().zip(&post).map(|(h, p)| h * p).sum();
            *g += expected - row[label - 1];
        }
    }
    let n = samples.len() as f64;
    (loss / n, grad.into_iter().map(|g| g / n).collect())
}

/// Full-batch gradient descent on the mean cross-entropy of the gold positions.
///
/// `samples` pairs precomputed scores with the 1-based correct position.
pub fn train_weights_on_scores(
    samples: &[(FeatureScores, usize)],
    config: &WeightTrainingConfig,
) -> Result<WeightTraining> {
    let Some((first, _)) = samples.first() else {
        return Err(Error::InsufficientData("no boundary training samples".into()));
    };
    let features = first.feature_count();
    for (scores, label) in samples {
        if scores.feature_count() != features {
            return Err(Error::Domain("samples disagree on feature count".into()));
        }
        if *label == 0 || *label > scores.positions() {
            return Err(Error::BoundaryDomain {
                position: *label,
                min: 1,
                max: scores.positions(),
            });
        }
    }
    if !(config.learning_rate.is_finite() && config.init.is_finite()) {
        return Err(Error::Configuration("learning rate and init must be finite".into()));
    }

    let mut lambda = vec![config.init; features];
    let mut losses = Vec::with_capacity(config.epochs + 1);
    for epoch in 0..=config.epochs {
        let (loss, grad) = loss_and_gradient(samples, &FeatureWeights(lambda.clone()));
        if !loss.is_finite() {
            return Err(Error::Training { epoch, loss });
        }
        losses.push(loss);
        if epoch == config.epochs {
            break;
        }
        for (l, g) in lambda.iter_mut().zip(&grad) {
            *l -= config.learning_rate * g;
        }
        if lambda.iter().any(|l| !l.is_finite()) {
            return Err(Error::Training {
                epoch: epoch + 1,
                loss: f64::NAN,
            });
        }
    }
    Ok(WeightTraining {
        weights: FeatureWeights(lambda),
        losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn zero_weights_give_uniform_posterior() {
        let s = FeatureScores::from_values(vec![vec![0.1, 0.5, 3.0, 7.0]]).unwrap();
        let p = position_posterior(&s, &FeatureWeights::new(vec![0.0]).unwrap()).unwrap();
        assert!(p.probabilities().iter().all(|&x| close(x, 0.25)));
    }

    #[test]
    fn single_feature_unit_weight_is_normalization() {
        let s = FeatureScores::from_values(vec![vec![0.2, 0.8]]).unwrap();
        let p = position_posterior(&s, &FeatureWeights::ones(1)).unwrap();
        assert!(close(p.at(1), 0.2) && close(p.at(2), 0.8));
    }

    #[test]
    fn two_feature_product() {
        // unnormalised products: [1*4, 2*1] = [4, 2]
        let s = FeatureScores::from_values(vec![vec![1.0, 2.0], vec![4.0, 1.0]]).unwrap();
        let w = FeatureWeights::ones(2);
        let p = position_posterior(&s, &w).unwrap();
        assert!(close(p.at(1), 2.0 / 3.0) && close(p.at(2), 1.0 / 3.0));
        assert_eq!(select_boundary(&s, &w).unwrap(), 1);
    }

    #[test]
    fn monotone_and_tied_scores_pick_last() {
        let inc = FeatureScores::from_values(vec![vec![0.1, 0.2, 0.3]]).unwrap();
        assert_eq!(select_boundary(&inc, &FeatureWeights::ones(1)).unwrap(), 3);
        let flat = FeatureScores::from_values(vec![vec![0.5; 4]]).unwrap();
        assert_eq!(select_boundary(&flat, &FeatureWeights::ones(1)).unwrap(), 4);
    }

    #[test]
    fn non_positive_scores_rejected() {
        assert!(matches!(
            FeatureScores::from_values(vec![vec![0.5, 0.0]]),
            Err(Error::Domain(_))
        ));
        assert!(FeatureScores::from_values(vec![vec![-1.0]]).is_err());
    }

    #[test]
    fn weight_length_mismatch_is_domain_error() {
        let s = FeatureScores::from_values(vec![vec![0.5, 0.5]]).unwrap();
        assert!(position_posterior(&s, &FeatureWeights::ones(2)).is_err());
    }

    #[test]
    fn zero_epochs_returns_initial_weights() {
        let s = FeatureScores::from_values(vec![vec![1.0, 2.0]]).unwrap();
        let out = train_weights_on_scores(
            &[(s, 2)],
            &WeightTrainingConfig {
                epochs: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(out.weights.as_slice(), &[1.0]);
        assert_eq!(out.losses.len(), 1);
    }

    #[test]
    fn constant_feature_has_zero_gradient() {
        let samples: Vec<_> = (2..6)
            .map(|n| {
                let s = FeatureScores::from_values(vec![
                    vec![0.3; n],
                    (1..=n).map(|a| if a == n { 2.0 } else { 1.0 }).collect(),
                ])
                .unwrap();
                (s, n)
            })
            .collect();
        let out = train_weights_on_scores(
            &samples,
            &WeightTrainingConfig {
                learning_rate: 0.5,
                epochs: 50,
                init: 1.0,
            },
        )
        .unwrap();
        assert!(close(out.weights.as_slice()[0], 1.0));
        assert!(out.weights.as_slice()[1] > 1.0);
    }

    #[test]
    fn divergence_names_the_epoch() {
        let s = FeatureScores::from_log(vec![vec![0.0, 1e300]]).unwrap();
        let err = train_weights_on_scores(
            &[(s, 1)],
            &WeightTrainingConfig {
                learning_rate: 1e10,
                epochs: 5,
                init: 1.0,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Training { .. }));
    }
}
