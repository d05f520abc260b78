//! Gauss–Legendre rules on `[-1, 1]`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math::cos;

pub const MAX_GAUSS_POINTS: usize = 16;
const NEWTON_TOL: f64 = 1e-14;

/// `(P_r(t), P_r'(t))` by the three-term recurrence.
pub(crate) fn legendre_with_derivative(r: usize, t: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = t;
    if r == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=r {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * t * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    let dp = r as f64 * (t * p - p_prev) / (t * t - 1.0);
    (p, dp)
}

/// Nodes (ascending) and weights of the `r`-point Gauss–Legendre rule.
///
/// Roots of `P_r` are polished by Newton's method from Chebyshev-type
/// initial guesses; the rule is exact for polynomials of degree `2r - 1`.
pub fn gauss_legendre(r: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if r == 0 || r > MAX_GAUSS_POINTS {
        return Err(Error::invalid("Gauss-Legendre order must lie in 1..=16"));
    }
    let mut nodes = Vec::with_capacity(r);
    let mut weights = Vec::with_capacity(r);
    let rf = r as f64;
    for i in 0..r {
        let mut t = cos(PI * (i as f64 + 0.75) / (rf + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(r, t);
            dp = d;
            let step = p / d;
            t -= step;
            if step.abs() < NEWTON_TOL {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(r, t);
        if d.is_finite() {
            dp = d;
        }
        nodes.push(t);
        weights.push(2.0 / ((1.0 - t * t) * dp * dp));
    }
    // guesses run from +1 down to -1
    nodes.reverse();
    weights.reverse();
    for i in 0..r / 2 {
        // enforce exact symmetry of the rule
        let j = r - 1 - i;
        let t = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -t;
        nodes[j] = t;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if r % 2 == 1 {
        nodes[r / 2] = 0.0;
    }
    Ok((nodes, weights))
}
