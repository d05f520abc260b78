//! Empirical eigendecay: a dominating sequence `τ`, exponent `γ` and sum `s0`.

use alloc::vec::Vec;

use crate::basis::CdfBasis;
use crate::env::Grids;
use crate::error::{Error, Result};
use crate::math::powf;
use crate::operator::point_spectrum;

/// Default cap on `Σ τ_k^γ`.
pub const DEFAULT_S0_BUDGET: f64 = 10.0;

/// Relative level below which eigenvalues count as round-off.
const ROUNDOFF: f64 = 1e-10;

const GAMMA_LADDER: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct EigendecayFit {
    /// Descending dominating sequence.
    pub tau: Vec<f64>,
    pub gamma: f64,
    /// Achieved `Σ τ_k^γ` over positive entries.
    pub s0: f64,
    /// Smallest `c` with `τ_k ≤ c / k`.
    pub c: f64,
}

impl EigendecayFit {
    /// Picks the smallest ladder exponent whose sum fits `s0_budget`,
    /// falling back to `γ = 1`.
    pub fn from_tau(tau: Vec<f64>, s0_budget: f64) -> Result<Self> {
        if tau.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::invalid("dominating sequence must be nonnegative"));
        }
        if tau.windows(2).any(|p| p[1] > p[0]) {
            return Err(Error::invalid("dominating sequence must be descending"));
        }
        let sum = |g: f64| -> f64 { tau.iter().filter(|t| **t > 0.0).map(|t| powf(*t, g)).sum() };
        let gamma = GAMMA_LADDER
            .iter()
            .copied()
            .find(|g| sum(*g) <= s0_budget)
            .unwrap_or(1.0);
        let s0 = sum(gamma);
        let c = tau
            .iter()
            .enumerate()
            .map(|(k, t)| (k + 1) as f64 * t)
            .fold(0.0, f64::max);
        Ok(Self { tau, gamma, s0, c })
    }
}

/// `τ_k = max_pairs λ_k(L^{x,a})` for `k ≤ k_max`, then [`EigendecayFit::from_tau`].
pub fn estimate_eigendecay(
    basis: &dyn CdfBasis,
    pairs: &[(Vec<f64>, usize)],
    k_max: usize,
    grids: &Grids,
    s0_budget: f64,
) -> Result<EigendecayFit> {
    if pairs.is_empty() {
        return Err(Error::Empty);
    }
    if k_max < 4 {
        return Err(Error::invalid("k_max must be at least 4"));
    }
    let len = k_max.min(grids.omega.len());
    let mut tau = alloc::vec![0.0_f64; len];
    for (x, a) in pairs {
        let spec = point_spectrum(basis, x, *a, grids)?;
        let floor = ROUNDOFF * spec.eigenvalues().first().copied().unwrap_or(0.0);
        for (t, l) in tau.iter_mut().zip(spec.eigenvalues()) {
            if *l > floor {
                *t = t.max(*l);
            }
        }
    }
    EigendecayFit::from_tau(tau, s0_budget)
}
