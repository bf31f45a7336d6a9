//! Gaussian boundary feature: `N(a | θμ·|y|, θσ²)` with θ fit by least squares.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SIGMA_MIN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinRegParams {
    /// Source positions per target word.
    pub theta_mu: f64,
    pub theta_sigma: f64,
    pub sigma_min: f64,
}

impl LinRegParams {
    pub fn new(theta_mu: f64, theta_sigma: f64, sigma_min: f64) -> Result<Self> {
        if !(sigma_min > 0.0) || !theta_mu.is_finite() || !theta_sigma.is_finite() {
            return Err(Error::Configuration(format!(
                "invalid linreg parameters mu={theta_mu} sigma={theta_sigma} sigma_min={sigma_min}"
            )));
        }
        Ok(LinRegParams {
            theta_mu,
            theta_sigma: theta_sigma.max(sigma_min),
            sigma_min,
        })
    }

    pub fn mean(&self, y_len: usize) -> f64 {
        self.theta_mu * y_len as f64
    }
}

/// Least squares through the origin on `(target length, source length)` pairs.
///
/// The residual spread uses the `n - 1` denominator and is floored at `sigma_min`.
pub fn fit_linreg(samples: &[(usize, usize)], sigma_min: f64) -> Result<LinRegParams> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "linreg needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let sxy: f64 = samples.iter().map(|&(y, a)| (y * a) as f64).sum();
    let sxx: f64 = samples.iter().map(|&(y, _)| (y * y) as f64).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateDesign(
            "every target length is zero".into(),
        ));
    }
    let theta_mu = sxy / sxx;
    let rss: f64 = samples
        .iter()
        .map(|&(y, a)| {
            let r = a as f64 - theta_mu * y as f64;
            r * r
        })
        .sum();
    let sigma = (rss / (samples.len() - 1) as f64).sqrt();
    LinRegParams::new(theta_mu, sigma, sigma_min)
}

/// Natural-log normal density at position `a`.
pub fn gaussian_log_score(params: &LinRegParams, a: usize, y_len: usize) -> f64 {
    let sigma = params.theta_sigma;
    let z = (a as f64 - params.mean(y_len)) / sigma;
    -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

pub fn gaussian_score(params: &LinRegParams, a: usize, y_len: usize) -> f64 {
    gaussian_log_score(params, a, y_len).exp()
}
