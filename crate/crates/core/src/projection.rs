//! Projection onto `C = {θ ≥ 0, ∫θ = 1, ‖θ‖ ≤ M}` under the `U_D` norm.
//!
//! The outer loop is accelerated projected gradient on `‖y − θ‖²_U` with
//! gradient-based restarts. Each step projects exactly onto `C` in the
//! quadrature L² inner product: a water-filling threshold handles the
//! simplex part, and a bisection on that threshold enforces the ball.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{weighted_dot, GridFunction};
use crate::math::sqrt;
use crate::operator::DesignOperator;

pub const MAX_ITERATIONS: usize = 10_000;
pub const STEP_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionDiagnostics {
    /// Regression loss of the returned density, when known.
    pub loss: Option<f64>,
    /// Retained spectral modes, when known.
    pub n_eps: Option<usize>,
    pub iterations: usize,
    /// `false` when the iteration cap was hit.
    pub converged: bool,
}

/// A feasible coefficient density.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientEstimate {
    pub theta_hat: GridFunction,
    pub norm_bound_m: f64,
    pub diagnostics: ProjectionDiagnostics,
}

/// Approximate `argmin_{y ∈ C} ‖y − θ‖_U`.
pub fn project_to_c(
    theta: &GridFunction,
    op: &DesignOperator,
    m: f64,
) -> Result<CoefficientEstimate> {
    if !crate::grid::shares_grid(theta.grid(), op.grid()) {
        return Err(Error::GridMismatch);
    }
    let grid = op.grid();
    let weights = grid.weights();
    let measure = grid.measure();
    if !(m.is_finite() && m * m * measure >= 1.0 - 1e-12) {
        return Err(Error::invalid("M must admit the uniform density"));
    }
    let target = theta.values();
    let start = project_l2(weights, target, m);
    let lambda_max = op.spectrum()?.eigenvalues().first().copied().unwrap_or(0.0);
    if !(lambda_max > 0.0) {
        return Ok(finish(op, start, m, 0, true));
    }
    let step = 1.0 / (2.0 * lambda_max);
    let kernel = op.kernel_matrix();
    let apply = |d: &[f64]| -> Vec<f64> {
        let weighted: Vec<f64> = d.iter().zip(weights).map(|(v, w)| v * w).collect();
        kernel.mul_vec(&weighted)
    };
    let objective = |y: &[f64]| -> f64 {
        let d: Vec<f64> = y.iter().zip(target).map(|(a, b)| a - b).collect();
        weighted_dot(weights, &d, &apply(&d))
    };

    let mut x_prev = start.clone();
    let mut v = start.clone();
    let mut t = 1.0_f64;
    let mut best = start.clone();
    let mut best_obj = objective(&start);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let diff: Vec<f64> = v.iter().zip(target).map(|(a, b)| a - b).collect();
        let grad: Vec<f64> = apply(&diff).into_iter().map(|g| 2.0 * g).collect();
        let trial: Vec<f64> = v.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
        let x = project_l2(weights, &trial, m);
        let delta: Vec<f64> = x.iter().zip(&x_prev).map(|(a, b)| a - b).collect();
        let moved = sqrt(weighted_dot(weights, &delta, &delta));
        let obj = objective(&x);
        if obj < best_obj {
            best_obj = obj;
            best.clone_from(&x);
        }
        if moved < STEP_TOLERANCE {
            best = x;
            converged = true;
            break;
        }
        if weighted_dot(weights, &grad, &delta) > 0.0 {
            t = 1.0;
            v.clone_from(&x);
        } else {
            let t_next = 0.5 * (1.0 + sqrt(1.0 + 4.0 * t * t));
            let beta = (t - 1.0) / t_next;
            v = x.iter().zip(&delta).map(|(a, d)| a + beta * d).collect();
            t = t_next;
        }
        x_prev = x;
    }
    Ok(finish(op, best, m, iterations, converged))
}

fn finish(
    op: &DesignOperator,
    values: Vec<f64>,
    m: f64,
    iterations: usize,
    converged: bool,
) -> CoefficientEstimate {
    CoefficientEstimate {
        theta_hat: GridFunction::from_parts_unchecked(op.grid().clone(), values),
        norm_bound_m: m,
        diagnostics: ProjectionDiagnostics {
            loss: None,
            n_eps: None,
            iterations,
            converged,
        },
    }
}

/// Exact projection of `z` onto `C` in the weighted L² inner product.
///
/// Minimisers have the form `max(z − τ, 0) / S(τ)` with
/// `S(τ) = Σ w max(z − τ, 0)`; `τ` is the water-filling level when the
/// ball is inactive and is lowered by bisection otherwise.
pub fn project_l2(weights: &[f64], z: &[f64], m: f64) -> Vec<f64> {
    let measure: f64 = weights.iter().sum();
    let uniform = 1.0 / measure;
    if m * m * measure <= 1.0 + 1e-12 {
        return alloc::vec![uniform; z.len()];
    }
    let tau0 = water_level(weights, z);
    let ratio_ok = |tau: f64| -> (bool, Vec<f64>) {
        let y = shifted(weights, z, tau);
        let norm = sqrt(weighted_dot(weights, &y, &y));
        (norm <= m, y)
    };
    let (ok, y0) = ratio_ok(tau0);
    if ok {
        return y0;
    }
    let zmin = z.iter().copied().fold(f64::INFINITY, f64::min);
    let mut span = 1.0_f64.max(z.iter().map(|v| v.abs()).fold(0.0, f64::max));
    let mut lo = zmin - span;
    let mut feasible = loop {
        let (ok, y) = ratio_ok(lo);
        if ok {
            break y;
        }
        span *= 2.0;
        lo = zmin - span;
        if !span.is_finite() {
            return alloc::vec![uniform; z.len()];
        }
    };
    let mut hi = tau0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (ok, y) = ratio_ok(mid);
        if ok {
            lo = mid;
            feasible = y;
        } else {
            hi = mid;
        }
    }
    feasible
}

fn shifted(weights: &[f64], z: &[f64], tau: f64) -> Vec<f64> {
    let mut y: Vec<f64> = z.iter().map(|v| (v - tau).max(0.0)).collect();
    let mass = weighted_dot(weights, &y, &alloc::vec![1.0; y.len()]);
    for v in &mut y {
        *v /= mass;
    }
    y
}

/// Level `τ` with `Σ_i w_i max(z_i − τ, 0) = 1`.
fn water_level(weights: &[f64], z: &[f64]) -> f64 {
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| z[b].total_cmp(&z[a]));
    let mut wz = 0.0;
    let mut ws = 0.0;
    let mut tau = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        wz += weights[i] * z[i];
        ws += weights[i];
        tau = (wz - 1.0) / ws;
        let next = order.get(rank + 1).map(|&j| z[j]);
        if next.is_none_or(|zn| tau >= zn) {
            break;
        }
    }
    tau
}
