//! Closed-form confidence budgets for the regression oracle.

use crate::error::{Error, Result};
use crate::math::{ln, powf, sqrt};

/// Inputs to [`error_budget`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetInputs {
    /// Sample size.
    pub n: f64,
    /// Failure probability, in `(0, 1)`.
    pub delta: f64,
    /// Eigendecay exponent, in `(0, 1]`.
    pub gamma: f64,
    /// Eigendecay sum bound.
    pub s0: f64,
    /// L² bound on coefficient densities.
    pub m_bound: f64,
    /// Lipschitz constant of the utility functional.
    pub lipschitz: f64,
    /// Lipschitz constant of the basis in `w`.
    pub l0: f64,
    /// Covering constant of `Ω × Ω`.
    pub covering_a: f64,
    /// Dimension of `Ω`.
    pub dim: f64,
    /// Kernel floor.
    pub eta: f64,
}

/// `E_δ(n)`, the constant `C`, and `Est = L² C E²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBudget {
    pub e_delta: f64,
    pub c_const: f64,
    pub est: f64,
    pub inputs: BudgetInputs,
}

pub fn error_budget(inputs: BudgetInputs) -> Result<ErrorBudget> {
    let BudgetInputs {
        n,
        delta,
        gamma,
        s0,
        m_bound,
        lipschitz,
        l0,
        covering_a,
        dim,
        eta,
    } = inputs;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta must lie in (0, 1)"));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid("gamma must lie in (0, 1]"));
    }
    let positive = [n, s0, m_bound, lipschitz, covering_a, dim, eta];
    if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || !(l0 >= 0.0 && l0.is_finite()) {
        return Err(Error::invalid("budget inputs must be positive and finite"));
    }
    let log_inv_delta = ln(1.0 / delta);
    let e_delta = 2.0 * sqrt(log_inv_delta)
        + (2.0 * sqrt(s0 * ln(1.0 + n)) + m_bound) * powf(n, gamma / (gamma + 2.0));
    let covering_log = if l0 > 0.0 {
        ln(2.0 * l0 * covering_a).max(0.0)
    } else {
        0.0
    };
    let c_const = 1.0 + (48.0 * sqrt(dim * covering_log) + 2.0 * sqrt(log_inv_delta)) / eta;
    let est = lipschitz * lipschitz * c_const * e_delta * e_delta;
    Ok(ErrorBudget {
        e_delta,
        c_const,
        est,
        inputs,
    })
}
