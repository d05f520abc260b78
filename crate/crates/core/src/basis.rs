//! CDF basis families `φ(x, a, w, ·)` and their regularity constants.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{E, PI};
use core::fmt;

use crate::env::Grids;
use crate::error::{Error, Result};
use crate::math::{cos, powf, sin};

/// Tolerance for the `[0, 1]` range contract on basis values.
pub const RANGE_TOL: f64 = 1e-12;

/// Regularity constants a basis family declares about itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisConstants {
    /// Lipschitz constant of `w ↦ φ(x,a,w,s)` in the sup norm.
    pub lipschitz_l0: f64,
    /// Lower bound on the point kernel `K^{x,a}(w,r)`.
    pub kernel_floor_eta: f64,
    /// L² bound `M` on admissible coefficient densities.
    pub coeff_norm_bound_m: f64,
    /// Covering constant `A` of `Ω × Ω`.
    pub covering_constant_a: f64,
    pub context_dim: usize,
    pub omega_dim: usize,
    pub action_count: usize,
}

/// A family of CDFs on `S ⊂ ℝ`, indexed by context, action and `w ∈ Ω`.
pub trait CdfBasis: fmt::Debug + Send + Sync {
    fn name(&self) -> &str;

    fn constants(&self) -> &BasisConstants;

    fn eval(&self, x: &[f64], a: usize, w: &[f64], s: f64) -> f64;

    /// `out[k] = φ(x, a, w, s[k])`.
    fn eval_row(&self, x: &[f64], a: usize, w: &[f64], s: &[f64], out: &mut [f64]) {
        for (o, &sk) in out.iter_mut().zip(s) {
            *o = self.eval(x, a, w, sk);
        }
    }
}

/// `φ(x, a, w_i, s_k)` tabulated on an (Ω-grid × S-grid) pair.
///
/// The S grid is a midpoint rule whose last node sits below `sup S`; the
/// last column is closed to 1 so that every row is the CDF of an outcome
/// snapped onto the S nodes (mass above the penultimate node goes to the
/// last one).
#[derive(Debug, Clone)]
pub struct PhiTable {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl PhiTable {
    pub fn new(basis: &dyn CdfBasis, x: &[f64], a: usize, grids: &Grids) -> Result<Self> {
        let rows = grids.omega.len();
        let s = grids.s.points_1d();
        let cols = s.len();
        let mut data = alloc::vec![0.0; rows * cols];
        for (i, row) in data.chunks_exact_mut(cols).enumerate() {
            basis.eval_row(x, a, grids.omega.node(i), s, row);
            for (k, v) in row.iter_mut().enumerate() {
                if !(*v >= -RANGE_TOL && *v <= 1.0 + RANGE_TOL) {
                    return Err(Error::BasisContract {
                        value: *v,
                        s_index: k,
                    });
                }
                *v = v.clamp(0.0, 1.0);
            }
            row[cols - 1] = 1.0;
        }
        Ok(Self { rows, cols, data })
    }

    pub fn omega_len(&self) -> usize {
        self.rows
    }

    pub fn s_len(&self) -> usize {
        self.cols
    }

    /// The CDF row `φ(x, a, w_i, ·)`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `F(s_k) = Σ_i ν_i θ_i φ(w_i, s_k)`.
    pub fn mix(&self, theta: &[f64], omega_weights: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.cols];
        for i in 0..self.rows {
            let c = theta[i] * omega_weights[i];
            if c == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(self.row(i)) {
                *o += c * p;
            }
        }
        out
    }
}

type BasisFn = dyn Fn(&[f64], usize, &[f64], f64) -> f64 + Send + Sync;

/// Basis backed by a closure; handy for analytic test families.
pub struct FnBasis {
    name: String,
    constants: BasisConstants,
    f: Box<BasisFn>,
}

impl FnBasis {
    pub fn new(
        name: impl Into<String>,
        constants: BasisConstants,
        f: impl Fn(&[f64], usize, &[f64], f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            constants,
            f: Box::new(f),
        }
    }
}

impl fmt::Debug for FnBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnBasis")
            .field("name", &self.name)
            .field("constants", &self.constants)
            .finish_non_exhaustive()
    }
}

impl CdfBasis for FnBasis {
    fn name(&self) -> &str {
        &self.name
    }

    fn constants(&self) -> &BasisConstants {
        &self.constants
    }

    fn eval(&self, x: &[f64], a: usize, w: &[f64], s: f64) -> f64 {
        (self.f)(x, a, w, s)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Kumaraswamy CDF `1 - (1 - s^α)^β` on `[0, 1]`.
#[inline]
pub fn kumaraswamy_cdf(s: f64, alpha: f64, beta: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    1.0 - powf(1.0 - powf(s, alpha), beta)
}

/// Lower bound on `∫ φ φ` when every CDF dominates `s^{α_max}`.
fn power_floor(alpha_max: f64) -> f64 {
    1.0 / (2.0 * alpha_max + 1.0)
}

/// `φ(x, a, w, s) = s` for every argument.
#[derive(Debug, Clone)]
pub struct Rank1Uniform {
    constants: BasisConstants,
}

impl Rank1Uniform {
    pub fn new(action_count: usize, context_dim: usize, m: f64) -> Self {
        Self {
            constants: BasisConstants {
                lipschitz_l0: 0.0,
                kernel_floor_eta: 1.0 / 3.0,
                coeff_norm_bound_m: m,
                covering_constant_a: 1.0,
                context_dim,
                omega_dim: 1,
                action_count,
            },
        }
    }
}

impl CdfBasis for Rank1Uniform {
    fn name(&self) -> &str {
        "rank1-uniform"
    }

    fn constants(&self) -> &BasisConstants {
        &self.constants
    }

    fn eval(&self, _x: &[f64], _a: usize, _w: &[f64], s: f64) -> f64 {
        s.clamp(0.0, 1.0)
    }
}

/// Kumaraswamy CDFs with shape parameters varying smoothly in `(x, a, w)`:
/// `α = 1 + A_α q₁`, `β = 1 + A_β q₂` with `q₁, q₂ ∈ [0, 1]` trigonometric
/// in `w̄` (mean coordinate of `w`) and phase-shifted by context and action.
#[derive(Debug, Clone)]
pub struct Kumaraswamy {
    alpha_amp: f64,
    beta_amp: f64,
    constants: BasisConstants,
}

impl Kumaraswamy {
    pub fn new(
        action_count: usize,
        context_dim: usize,
        omega_dim: usize,
        alpha_amp: f64,
        beta_amp: f64,
        m: f64,
    ) -> Result<Self> {
        if !(alpha_amp >= 0.0 && beta_amp >= 0.0) {
            return Err(Error::invalid("Kumaraswamy amplitudes must be nonnegative"));
        }
        // |∂φ/∂α| ≤ β_max/e, |∂φ/∂β| ≤ 1/e, |dq/dw̄| ≤ π
        let l0 = ((1.0 + beta_amp) * alpha_amp + beta_amp) * PI / E;
        Ok(Self {
            alpha_amp,
            beta_amp,
            constants: BasisConstants {
                lipschitz_l0: l0,
                kernel_floor_eta: power_floor(1.0 + alpha_amp),
                coeff_norm_bound_m: m,
                covering_constant_a: 1.0,
                context_dim,
                omega_dim,
                action_count,
            },
        })
    }

    fn shapes(&self, x: &[f64], a: usize, w: &[f64]) -> (f64, f64) {
        let z = mean(x);
        let k = self.constants.action_count.max(1) as f64;
        let wb = mean(w);
        let af = a as f64;
        let q1 = 0.5 * (1.0 + sin(2.0 * PI * wb + 2.0 * PI * (z + af / k)));
        let q2 = 0.5 * (1.0 + cos(2.0 * PI * (1.0 - wb) + PI * z * (af + 1.0) / k + af));
        (1.0 + self.alpha_amp * q1, 1.0 + self.beta_amp * q2)
    }
}

impl CdfBasis for Kumaraswamy {
    fn name(&self) -> &str {
        "kumaraswamy"
    }

    fn constants(&self) -> &BasisConstants {
        &self.constants
    }

    fn eval(&self, x: &[f64], a: usize, w: &[f64], s: f64) -> f64 {
        let (alpha, beta) = self.shapes(x, a, w);
        kumaraswamy_cdf(s, alpha, beta)
    }

    fn eval_row(&self, x: &[f64], a: usize, w: &[f64], s: &[f64], out: &mut [f64]) {
        let (alpha, beta) = self.shapes(x, a, w);
        for (o, &sk) in out.iter_mut().zip(s) {
            *o = kumaraswamy_cdf(sk, alpha, beta);
        }
    }
}

/// Hat-function interpolation in `w̄` between `rank` Kumaraswamy CDFs whose
/// shapes depend on `(x, a)` only; the point kernels have rank ≤ `rank`.
#[derive(Debug, Clone)]
pub struct FiniteRank {
    rank: usize,
    alpha_amp: f64,
    beta_amp: f64,
    constants: BasisConstants,
}

impl FiniteRank {
    pub fn new(
        action_count: usize,
        context_dim: usize,
        omega_dim: usize,
        rank: usize,
        alpha_amp: f64,
        beta_amp: f64,
        m: f64,
    ) -> Result<Self> {
        if rank == 0 {
            return Err(Error::invalid("rank must be at least 1"));
        }
        if !(alpha_amp >= 0.0 && beta_amp >= 0.0) {
            return Err(Error::invalid("amplitudes must be nonnegative"));
        }
        Ok(Self {
            rank,
            alpha_amp,
            beta_amp,
            constants: BasisConstants {
                // adjacent component CDFs differ by at most 1, hats have slope rank-1
                lipschitz_l0: (rank - 1) as f64,
                kernel_floor_eta: power_floor(1.0 + alpha_amp),
                coeff_norm_bound_m: m,
                covering_constant_a: 1.0,
                context_dim,
                omega_dim,
                action_count,
            },
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    fn component_shape(&self, x: &[f64], a: usize, c: usize) -> (f64, f64) {
        let z = mean(x);
        let r = self.rank as f64;
        let af = a as f64;
        let cf = c as f64;
        let q1 = 0.5 * (1.0 + sin(2.0 * PI * z + PI * cf * (af + 1.0) / r));
        let q2 = 0.5 * (1.0 + cos(PI * z * (af + 1.0) + PI * cf / r + 1.3 * af));
        (1.0 + self.alpha_amp * q1, 1.0 + self.beta_amp * q2)
    }

    /// Hat weights: at most two nonzero entries, summing to one.
    fn hats(&self, w: &[f64]) -> (usize, f64, usize, f64) {
        if self.rank == 1 {
            return (0, 1.0, 0, 0.0);
        }
        let pos = mean(w).clamp(0.0, 1.0) * (self.rank - 1) as f64;
        let lo = (pos as usize).min(self.rank - 2);
        let frac = pos - lo as f64;
        (lo, 1.0 - frac, lo + 1, frac)
    }
}

impl CdfBasis for FiniteRank {
    fn name(&self) -> &str {
        "finite-rank"
    }

    fn constants(&self) -> &BasisConstants {
        &self.constants
    }

    fn eval(&self, x: &[f64], a: usize, w: &[f64], s: f64) -> f64 {
        let (c0, h0, c1, h1) = self.hats(w);
        let (a0, b0) = self.component_shape(x, a, c0);
        let mut v = h0 * kumaraswamy_cdf(s, a0, b0);
        if h1 > 0.0 {
            let (a1, b1) = self.component_shape(x, a, c1);
            v += h1 * kumaraswamy_cdf(s, a1, b1);
        }
        v
    }

    fn eval_row(&self, x: &[f64], a: usize, w: &[f64], s: &[f64], out: &mut [f64]) {
        let (c0, h0, c1, h1) = self.hats(w);
        let (a0, b0) = self.component_shape(x, a, c0);
        let (a1, b1) = self.component_shape(x, a, c1);
        for (o, &sk) in out.iter_mut().zip(s) {
            let mut v = h0 * kumaraswamy_cdf(sk, a0, b0);
            if h1 > 0.0 {
                v += h1 * kumaraswamy_cdf(sk, a1, b1);
            }
            *o = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_uniform_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grids() -> Grids {
        Grids {
            omega: build_uniform_grid(1, 16).unwrap(),
            s: build_uniform_grid(1, 32).unwrap(),
        }
    }

    fn catalog() -> Vec<Box<dyn CdfBasis>> {
        alloc::vec![
            Box::new(Rank1Uniform::new(3, 2, 2.0)) as Box<dyn CdfBasis>,
            Box::new(Kumaraswamy::new(3, 2, 1, 2.0, 2.0, 2.0).unwrap()),
            Box::new(FiniteRank::new(3, 2, 1, 8, 2.0, 2.0, 2.0).unwrap()),
        ]
    }

    #[test]
    fn catalog_values_are_monotone_cdfs() {
        let g = grids();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for basis in catalog() {
            for _ in 0..50 {
                let x = [rng.random::<f64>(), rng.random::<f64>()];
                let a = rng.random_range(0..3);
                let t = PhiTable::new(basis.as_ref(), &x, a, &g).unwrap();
                for i in 0..t.omega_len() {
                    let row = t.row(i);
                    assert!(row.windows(2).all(|p| p[0] <= p[1] + 1e-15));
                    assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
                    assert_eq!(row[row.len() - 1], 1.0);
                }
            }
        }
    }

    #[test]
    fn declared_lipschitz_constant_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for basis in catalog() {
            let l0 = basis.constants().lipschitz_l0;
            for _ in 0..2000 {
                let x = [rng.random::<f64>(), rng.random::<f64>()];
                let a = rng.random_range(0..3);
                let w = rng.random::<f64>();
                let r = rng.random::<f64>();
                let s = rng.random::<f64>();
                let diff = (basis.eval(&x, a, &[w], s) - basis.eval(&x, a, &[r], s)).abs();
                assert!(diff <= l0 * (w - r).abs() + 1e-12, "{}", basis.name());
            }
        }
    }

    #[test]
    fn kumaraswamy_with_zero_amplitude_is_uniform() {
        let k = Kumaraswamy::new(2, 1, 1, 0.0, 0.0, 2.0).unwrap();
        for &s in &[0.0, 0.1, 0.5, 0.93, 1.0] {
            assert!((k.eval(&[0.3], 1, &[0.7], s) - s).abs() < 1e-15);
        }
    }

    #[test]
    fn out_of_range_basis_is_a_contract_violation() {
        let consts = *Rank1Uniform::new(1, 1, 2.0).constants();
        let bad = FnBasis::new("bad", consts, |_, _, _, s| 2.0 * s);
        assert!(matches!(
            PhiTable::new(&bad, &[0.0], 0, &grids()),
            Err(Error::BasisContract { .. })
        ));
    }
}
