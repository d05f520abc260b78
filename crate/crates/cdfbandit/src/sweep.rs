//! Held-out regression error as a function of sample size.

use cdfbandit_core::regression::{fit, predict_from_theta, RegressionConfig};
use cdfbandit_core::{Environment, GridFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::io::SweepRow;

const HOLDOUT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub holdout: usize,
    pub regression: RegressionConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub n: usize,
    /// One held-out error per seed, in seed order.
    pub errors: Vec<f64>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl SweepPoint {
    pub fn row(&self) -> SweepRow {
        SweepRow {
            n: self.n,
            median: self.median,
            q1: self.q1,
            q3: self.q3,
            seeds: self.errors.len(),
        }
    }
}

/// Uniform `(x, a)` pairs drawn from a fixed stream.
pub fn heldout_pairs(env: &Environment, count: usize, seed: u64) -> Vec<(Vec<f64>, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(HOLDOUT_STREAM);
    (0..count)
        .map(|_| {
            let x = env.sample_context(&mut rng);
            (x, rng.random_range(0..env.action_count()))
        })
        .collect()
}

/// Mean of `‖F̂(x, a) − F*(x, a)‖²_{L²(S)}` over `pairs`.
pub fn heldout_error(
    env: &Environment,
    theta: &GridFunction,
    pairs: &[(Vec<f64>, usize)],
) -> Result<f64> {
    let mut total = 0.0;
    for (x, a) in pairs {
        let est = predict_from_theta(theta, env.basis(), x, *a, env.grids())?;
        let truth = env.true_cdf(x, *a)?;
        let d = est.sub(&truth)?.l2_norm();
        total += d * d;
    }
    Ok(total / pairs.len() as f64)
}

/// Fits one dataset of size `n` drawn from stream `(seed, n)`.
pub fn sweep_cell(
    env: &Environment,
    n: usize,
    seed: u64,
    pairs: &[(Vec<f64>, usize)],
    regression: &RegressionConfig,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n as u64);
    let data = env.sample_dataset(n, &mut rng)?;
    let fitted = fit(&data, env.basis(), env.grids(), regression)?;
    heldout_error(env, &fitted.estimate.theta_hat, pairs)
}

pub fn regression_sweep(env: &Environment, options: &SweepOptions) -> Result<Vec<SweepPoint>> {
    let pairs = heldout_pairs(env, options.holdout, 0);
    let cells: Vec<(usize, u64)> = options
        .sizes
        .iter()
        .flat_map(|n| options.seeds.iter().map(move |s| (*n, *s)))
        .collect();
    let errors: Vec<f64> = cells
        .par_iter()
        .map(|(n, s)| sweep_cell(env, *n, *s, &pairs, &options.regression))
        .collect::<Result<_>>()?;
    Ok(options
        .sizes
        .iter()
        .zip(errors.chunks(options.seeds.len().max(1)))
        .map(|(n, errs)| {
            let mut sorted = errs.to_vec();
            sorted.sort_by(f64::total_cmp);
            SweepPoint {
                n: *n,
                errors: errs.to_vec(),
                median: quantile(&sorted, 0.5),
                q1: quantile(&sorted, 0.25),
                q3: quantile(&sorted, 0.75),
            }
        })
        .collect())
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.25), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
    }
}
