use rand::Rng;
use serde::Serialize;

use super::REFERENCE_DIFFICULTY_RANGE;
use crate::error::{Error, Result};
use crate::model::logistic;

/// I.i.d. question difficulties by inverse CDF.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DifficultySampler {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Linear interpolation of an empirical CDF: the `k`-th smallest of `N`
    /// values sits at probability `k / (N − 1)`.
    Empirical {
        sorted: Vec<f64>,
    },
}

impl Default for DifficultySampler {
    fn default() -> Self {
        let (lo, hi) = REFERENCE_DIFFICULTY_RANGE;
        DifficultySampler::Uniform { lo, hi }
    }
}

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl DifficultySampler {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::ParameterOutOfRange(format!("uniform range [{lo}, {hi}]")));
        }
        Ok(DifficultySampler::Uniform { lo, hi })
    }

    pub fn empirical(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::ParameterOutOfRange(
                "empirical difficulties must be finite and nonempty".into(),
            ));
        }
        values.sort_by(f64::total_cmp);
        Ok(DifficultySampler::Empirical { sorted: values })
    }

    /// Quantile breakpoints `(p, x)`.
    fn knots(&self) -> Vec<(f64, f64)> {
        match self {
            DifficultySampler::Uniform { lo, hi } => vec![(0.0, *lo), (1.0, *hi)],
            DifficultySampler::Empirical { sorted } if sorted.len() == 1 => vec![(0.0, sorted[0]), (1.0, sorted[0])],
            DifficultySampler::Empirical { sorted } => {
                let last = (sorted.len() - 1) as f64;
                sorted.iter().enumerate().map(|(k, &x)| (k as f64 / last, x)).collect()
            }
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let knots = self.knots();
        let k = knots.partition_point(|&(q, _)| q <= p).clamp(1, knots.len() - 1);
        let ((p0, x0), (p1, x1)) = (knots[k - 1], knots[k]);
        if p1 == p0 {
            return x1;
        }
        x0 + (x1 - x0) * (p - p0) / (p1 - p0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<f64> {
        (0..count).map(|_| self.sample(rng)).collect()
    }

    /// `E[f(ability − X)]` for `X` drawn from this sampler, in closed form.
    pub fn expected_accuracy(&self, ability: f64) -> f64 {
        self.knots()
            .windows(2)
            .map(|w| {
                let ((p0, x0), (p1, x1)) = (w[0], w[1]);
                if x1 == x0 {
                    (p1 - p0) * logistic(ability - x0)
                } else {
                    (p1 - p0) / (x1 - x0) * (softplus(ability - x0) - softplus(ability - x1))
                }
            })
            .sum()
    }
}
