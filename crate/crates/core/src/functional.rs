//! Lipschitz utility functionals `T` acting on grid CDFs.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, QuadratureGrid};
use crate::math::{exp, sqrt};

/// Default logistic bandwidth for [`UtilityFunctional::SmoothedQuantile`].
pub const DEFAULT_BANDWIDTH: f64 = 0.05;

const MONOTONE_TOL: f64 = 1e-9;

/// A utility functional together with its declared Lipschitz constant in
/// `L²(S, m)`.
#[derive(Debug, Clone, PartialEq)]
pub enum UtilityFunctional {
    /// Mean outcome on `S = [0, 1]`.
    Mean,
    /// Negated expected loss over the outcome nodes, where each node is a
    /// hypothesis with probability equal to the CDF increment there.
    ExpectedPenalty { loss_row: Vec<f64>, lipschitz: f64 },
    /// Logistic-smoothed level-`q` quantile.
    SmoothedQuantile { q: f64, h: f64 },
    /// Outcome variance on `S = [0, 1]`.
    Variance,
}

impl UtilityFunctional {
    pub fn smoothed_quantile(q: f64, h: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) || !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid("quantile needs 0 < q < 1 and h > 0"));
        }
        Ok(Self::SmoothedQuantile { q, h })
    }

    /// Penalty functional on the nodes of `s_grid`.
    ///
    /// Summation by parts turns `Σ_k (F_k − F_{k−1}) ℓ_k` into
    /// `Σ_k F_k (ℓ_k − ℓ_{k+1})`, whose `L²(S, m)` dual norm is the declared
    /// constant.
    pub fn expected_penalty(loss_row: Vec<f64>, s_grid: &QuadratureGrid) -> Result<Self> {
        if loss_row.len() != s_grid.len() {
            return Err(Error::LengthMismatch {
                expected: s_grid.len(),
                found: loss_row.len(),
            });
        }
        if loss_row.iter().any(|l| !l.is_finite()) {
            return Err(Error::NonFinite);
        }
        let n = loss_row.len();
        let sq: f64 = (0..n)
            .map(|k| {
                let next = if k + 1 < n { loss_row[k + 1] } else { 0.0 };
                let d = loss_row[k] - next;
                d * d / s_grid.weights()[k]
            })
            .sum();
        Ok(Self::ExpectedPenalty {
            loss_row,
            lipschitz: sqrt(sq),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::ExpectedPenalty { .. } => "expected-penalty",
            Self::SmoothedQuantile { .. } => "smoothed-quantile",
            Self::Variance => "variance",
        }
    }

    /// Declared Lipschitz constant `L`.
    pub fn lipschitz(&self) -> f64 {
        match self {
            Self::Mean => 1.0,
            Self::ExpectedPenalty { lipschitz, .. } => *lipschitz,
            Self::SmoothedQuantile { h, .. } => 1.0 / (4.0 * h),
            Self::Variance => 3.0,
        }
    }

    pub fn evaluate(&self, cdf: &GridFunction) -> Result<f64> {
        let w = cdf.grid().weights();
        let f = cdf.values();
        match self {
            Self::Mean => eval_mean(w, f),
            Self::ExpectedPenalty { loss_row, .. } => {
                let incr = increments(f);
                eval_expected_penalty(&incr, loss_row)
            }
            Self::SmoothedQuantile { q, h } => Ok(eval_smoothed_quantile(w, f, *q, *h)),
            Self::Variance => Ok(eval_variance(w, cdf.grid().points_1d(), f)),
        }
    }
}

fn increments(f: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    f.iter()
        .map(|v| {
            let d = v - prev;
            prev = *v;
            d
        })
        .collect()
}

/// `Σ_k w_k (1 − F_k)`, rejecting decreasing input.
pub fn eval_mean(weights: &[f64], f: &[f64]) -> Result<f64> {
    if f.windows(2).any(|p| p[1] < p[0] - MONOTONE_TOL) {
        return Err(Error::NonMonotoneCdf);
    }
    Ok(survival_integral(weights, f))
}

fn survival_integral(weights: &[f64], f: &[f64]) -> f64 {
    weights.iter().zip(f).map(|(w, v)| w * (1.0 - v)).sum()
}

/// `−Σ_j p_j ℓ_j`.
pub fn eval_expected_penalty(probabilities: &[f64], loss_row: &[f64]) -> Result<f64> {
    if probabilities.len() != loss_row.len() {
        return Err(Error::LengthMismatch {
            expected: loss_row.len(),
            found: probabilities.len(),
        });
    }
    Ok(-probabilities
        .iter()
        .zip(loss_row)
        .map(|(p, l)| p * l)
        .sum::<f64>())
}

/// `Σ_k w_k σ((q − F_k) / h)` with the logistic `σ`.
pub fn eval_smoothed_quantile(weights: &[f64], f: &[f64], q: f64, h: f64) -> f64 {
    weights
        .iter()
        .zip(f)
        .map(|(w, v)| w * logistic((q - v) / h))
        .sum()
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + exp(-z))
    } else {
        let e = exp(z);
        e / (1.0 + e)
    }
}

/// `E[Y²] − E[Y]²` with both moments from the survival function.
pub fn eval_variance(weights: &[f64], s: &[f64], f: &[f64]) -> f64 {
    let m1 = survival_integral(weights, f);
    let m2: f64 = weights
        .iter()
        .zip(s)
        .zip(f)
        .map(|((w, s), v)| 2.0 * s * (1.0 - v) * w)
        .sum();
    m2 - m1 * m1
}
