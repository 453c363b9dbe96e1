use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// `0.5 * ln(2 pi)`
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// Diagonal Gaussian with a state-independent, learnable log standard
/// deviation per output.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianHead {
    log_std: Vec<f64>,
}

impl GaussianHead {
    pub fn new(dim: usize) -> Self {
        Self {
            log_std: vec![0.0; dim],
        }
    }

    pub fn from_log_std(log_std: Vec<f64>) -> Self {
        Self { log_std }
    }

    pub fn from_sigma(sigma: &[f64]) -> Result<Self> {
        if let Some(&bad) = sigma.iter().find(|&&s| !s.is_finite() || s <= 0.0) {
            return Err(Error::InvalidSigma(bad));
        }
        Ok(Self {
            log_std: sigma.iter().map(|s| s.ln()).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn log_std(&self) -> &[f64] {
        &self.log_std
    }

    pub fn log_std_mut(&mut self) -> &mut [f64] {
        &mut self.log_std
    }

    pub fn sigma(&self) -> Vec<f64> {
        self.log_std.iter().map(|l| l.exp()).collect()
    }

    pub fn log_prob(&self, mean: &[f64], x: &[f64]) -> f64 {
        log_prob(mean, &self.log_std, x)
    }

    pub fn entropy(&self) -> f64 {
        entropy(&self.log_std)
    }

    pub fn sample(&self, mean: &[f64], rng: &mut impl Rng) -> Vec<f64> {
        mean.iter()
            .zip(&self.log_std)
            .map(|(&mu, &ls)| mu + ls.exp() * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }
}

/// Sum of independent normal log-densities.
pub fn log_prob(mean: &[f64], log_std: &[f64], x: &[f64]) -> f64 {
    debug_assert_eq!(mean.len(), x.len());
    debug_assert_eq!(mean.len(), log_std.len());
    mean.iter()
        .zip(log_std)
        .zip(x)
        .map(|((&mu, &ls), &v)| {
            let z = (v - mu) * (-ls).exp();
            -0.5 * z * z - ls - HALF_LN_2PI
        })
        .sum()
}

/// `sum_i 0.5 * ln(2 pi sigma_i^2) + 0.5`
pub fn entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|&ls| ls + HALF_LN_2PI + 0.5).sum()
}

/// Per-component entropy written out from `sigma`, for cross-checks.
pub fn component_entropy(sigma: f64) -> f64 {
    0.5 * (2.0 * PI * sigma * sigma).ln() + 0.5
}
