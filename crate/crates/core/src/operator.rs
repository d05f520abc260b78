//! Point integral operators `L^{x,a}`, the design operator `U_D = Σ_j L^{x_j,a_j}`
//! and their spectra.
//!
//! Operators act on `L²(Ω, ν)` discretised by the Ω grid:
//! `(Uθ)(w_i) = Σ_j ν_j K(w_i, w_j) θ_j`. The matrix `K·diag(ν)` is not
//! symmetric, but `diag(ν)^{1/2} K diag(ν)^{1/2}` is, and its eigenvectors
//! map to quadrature-orthonormal eigenfunctions.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use once_cell::race::OnceBox;

use crate::basis::{CdfBasis, PhiTable};
use crate::env::Grids;
use crate::error::{Error, Result};
use crate::grid::{shares_grid, weighted_dot, GridFunction, QuadratureGrid};
use crate::linalg::{sym_eig, SymMatrix};
use crate::math::sqrt;
use crate::spectral::SpectralDecomposition;

/// Tolerance below zero tolerated for `⟨θ, Uθ⟩`.
pub const PSD_TOL: f64 = 1e-10;

/// `K(w_i, w_j) = Σ_k m_k φ(w_i, s_k) φ(w_j, s_k)` from a tabulated basis.
pub fn point_kernel_from_table(table: &PhiTable, s_weights: &[f64]) -> SymMatrix {
    let mut acc = KernelAccumulator::new(table.omega_len(), s_weights);
    acc.add(table);
    acc.finish()
}

/// The kernel matrix of `L^{x,a}` on the Ω grid.
pub fn point_kernel(basis: &dyn CdfBasis, x: &[f64], a: usize, grids: &Grids) -> Result<SymMatrix> {
    let table = PhiTable::new(basis, x, a, grids)?;
    Ok(point_kernel_from_table(&table, grids.s.weights()))
}

/// Running sum of point kernels (upper triangle only until `finish`).
#[derive(Debug, Clone)]
pub struct KernelAccumulator {
    n: usize,
    sqrt_w: Vec<f64>,
    scaled: Vec<f64>,
    upper: SymMatrix,
    count: usize,
}

impl KernelAccumulator {
    pub fn new(omega_len: usize, s_weights: &[f64]) -> Self {
        Self {
            n: omega_len,
            sqrt_w: s_weights.iter().map(|w| sqrt(*w)).collect(),
            scaled: Vec::new(),
            upper: SymMatrix::zeros(omega_len),
            count: 0,
        }
    }

    pub fn add(&mut self, table: &PhiTable) {
        let cols = table.s_len();
        self.scaled.clear();
        self.scaled.extend(
            table
                .as_slice()
                .chunks_exact(cols)
                .flat_map(|row| row.iter().zip(&self.sqrt_w).map(|(p, w)| p * w)),
        );
        let n = self.n;
        let data = self.upper.as_mut_slice();
        for i in 0..n {
            let ri = &self.scaled[i * cols..(i + 1) * cols];
            for j in i..n {
                let rj = &self.scaled[j * cols..(j + 1) * cols];
                let dot: f64 = ri.iter().zip(rj).map(|(a, b)| a * b).sum();
                data[i * n + j] += dot;
            }
        }
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(mut self) -> SymMatrix {
        self.upper.mirror_upper();
        self.upper
    }
}

/// `U_D` for a multiset of (context, action) pairs, with a memoised spectrum.
pub struct DesignOperator {
    kernel: SymMatrix,
    grid: Arc<QuadratureGrid>,
    data_count: usize,
    spectrum: OnceBox<SpectralDecomposition>,
}

impl fmt::Debug for DesignOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DesignOperator")
            .field("size", &self.kernel.dim())
            .field("data_count", &self.data_count)
            .field("spectrum_cached", &self.spectrum.get().is_some())
            .finish()
    }
}

impl Clone for DesignOperator {
    fn clone(&self) -> Self {
        Self {
            kernel: self.kernel.clone(),
            grid: self.grid.clone(),
            data_count: self.data_count,
            spectrum: OnceBox::new(),
        }
    }
}

impl DesignOperator {
    pub fn new(kernel: SymMatrix, grid: Arc<QuadratureGrid>, data_count: usize) -> Result<Self> {
        if kernel.dim() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: kernel.dim(),
            });
        }
        let asym = kernel.max_asymmetry();
        if asym > 1e-10 * kernel.max_abs().max(1.0) {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        Ok(Self {
            kernel,
            grid,
            data_count,
            spectrum: OnceBox::new(),
        })
    }

    pub fn kernel_matrix(&self) -> &SymMatrix {
        &self.kernel
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    pub fn data_count(&self) -> usize {
        self.data_count
    }

    /// `Σ_i ν_i K(w_i, w_i)`, the quadrature trace.
    pub fn quadrature_trace(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .enumerate()
            .map(|(i, w)| w * self.kernel.get(i, i))
            .sum()
    }

    /// Spectral decomposition, computed on first use and cached. Concurrent
    /// callers may race to fill the cache; the first stored value wins.
    pub fn spectrum(&self) -> Result<&SpectralDecomposition> {
        self.spectrum
            .get_or_try_init(|| weighted_decompose(&self.kernel, &self.grid).map(Box::new))
    }

    /// Entrywise sum of two design operators on the same grid.
    pub fn combined(&self, other: &DesignOperator) -> Result<DesignOperator> {
        if !shares_grid(&self.grid, &other.grid) {
            return Err(Error::GridMismatch);
        }
        let mut kernel = self.kernel.clone();
        kernel.add_assign(&other.kernel)?;
        DesignOperator::new(
            kernel,
            self.grid.clone(),
            self.data_count + other.data_count,
        )
    }
}

/// Sum of point kernels over `pairs`.
pub fn design_operator(
    basis: &dyn CdfBasis,
    pairs: &[(Vec<f64>, usize)],
    grids: &Grids,
) -> Result<DesignOperator> {
    if pairs.is_empty() {
        return Err(Error::Empty);
    }
    let mut acc = KernelAccumulator::new(grids.omega.len(), grids.s.weights());
    for (x, a) in pairs {
        acc.add(&PhiTable::new(basis, x, *a, grids)?);
    }
    DesignOperator::new(acc.finish(), grids.omega.clone(), pairs.len())
}

/// Eigenpairs of the operator with kernel matrix `kernel` on `grid`.
pub(crate) fn weighted_decompose(
    kernel: &SymMatrix,
    grid: &Arc<QuadratureGrid>,
) -> Result<SpectralDecomposition> {
    let n = kernel.dim();
    let root: Vec<f64> = grid.weights().iter().map(|w| sqrt(*w)).collect();
    let sym = SymMatrix::from_fn(n, |i, j| root[i] * kernel.get(i, j) * root[j]);
    let eig = sym_eig(&sym)?;
    let mut values = Vec::with_capacity(n);
    let mut functions = Vec::with_capacity(n);
    for (lambda, v) in eig.values.into_iter().zip(eig.vectors) {
        values.push(lambda.max(0.0));
        let e: Vec<f64> = v.iter().zip(&root).map(|(vi, r)| vi / r).collect();
        functions.push(GridFunction::new(grid.clone(), e)?);
    }
    SpectralDecomposition::new(grid.clone(), values, functions)
}

/// Spectral decomposition of `U_D` (memoised on the operator).
pub fn spectral_decompose(op: &DesignOperator) -> Result<SpectralDecomposition> {
    op.spectrum().cloned()
}

/// Spectrum of a single point operator `L^{x,a}`.
pub fn point_spectrum(
    basis: &dyn CdfBasis,
    x: &[f64],
    a: usize,
    grids: &Grids,
) -> Result<SpectralDecomposition> {
    let k = point_kernel(basis, x, a, grids)?;
    weighted_decompose(&k, &grids.omega)
}

/// `(U_D θ)(w_i) = Σ_j ν_j K_ij θ_j`.
pub fn apply_operator(op: &DesignOperator, theta: &GridFunction) -> Result<GridFunction> {
    if !shares_grid(&op.grid, theta.grid()) {
        return Err(Error::GridMismatch);
    }
    let weighted: Vec<f64> = theta
        .values()
        .iter()
        .zip(op.grid.weights())
        .map(|(t, w)| t * w)
        .collect();
    let values = op.kernel.mul_vec(&weighted);
    GridFunction::new(op.grid.clone(), values)
}

/// `⟨θ, U_D θ⟩`, the squared weighted norm (may be slightly negative from round-off).
pub fn weighted_norm_sq(theta: &GridFunction, op: &DesignOperator) -> Result<f64> {
    let u = apply_operator(op, theta)?;
    Ok(weighted_dot(op.grid.weights(), theta.values(), u.values()))
}

/// `‖θ‖_U = √⟨θ, U_D θ⟩`.
pub fn weighted_norm(theta: &GridFunction, op: &DesignOperator) -> Result<f64> {
    let q = weighted_norm_sq(theta, op)?;
    if q < -PSD_TOL {
        return Err(Error::PsdViolation { value: q });
    }
    Ok(sqrt(q.max(0.0)))
}

/// `Π_{i ≤ cutoff} (1 + λ_i)`.
pub fn functional_determinant(spec: &SpectralDecomposition, cutoff: usize) -> Result<f64> {
    spec.functional_determinant(cutoff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BasisConstants, FnBasis, Kumaraswamy};
    use crate::grid::build_uniform_grid;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn consts() -> BasisConstants {
        BasisConstants {
            lipschitz_l0: 1.0,
            kernel_floor_eta: 1.0 / 3.0,
            coeff_norm_bound_m: 2.0,
            covering_constant_a: 1.0,
            context_dim: 1,
            omega_dim: 1,
            action_count: 2,
        }
    }

    fn grids(omega: usize, s: usize) -> Grids {
        Grids {
            omega: build_uniform_grid(1, omega).unwrap(),
            s: build_uniform_grid(1, s).unwrap(),
        }
    }

    fn uniform_basis() -> FnBasis {
        FnBasis::new("s", consts(), |_, _, _, s| s)
    }

    #[test]
    fn uniform_cdf_kernel_is_one_third() {
        let g = grids(8, 64);
        let k = point_kernel(&uniform_basis(), &[0.2], 0, &g).unwrap();
        assert!(k.is_exactly_symmetric());
        for v in k.as_slice() {
            assert!((v - 1.0 / 3.0).abs() <= 1e-3);
        }
    }

    #[test]
    fn point_mass_kernel_is_one() {
        let g = grids(8, 16);
        let b = FnBasis::new("one", consts(), |_, _, _, _| 1.0);
        let k = point_kernel(&b, &[0.2], 0, &g).unwrap();
        assert!(k.as_slice().iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn duplicated_pair_doubles_exactly() {
        let g = grids(12, 32);
        let b = Kumaraswamy::new(2, 1, 1, 2.0, 2.0, 2.0).unwrap();
        let one = design_operator(&b, &[(vec![0.3], 1)], &g).unwrap();
        let two = design_operator(&b, &[(vec![0.3], 1), (vec![0.3], 1)], &g).unwrap();
        assert_eq!(two.data_count(), 2);
        assert_eq!(two.kernel_matrix(), &one.kernel_matrix().scaled(2.0));
        let s1 = spectral_decompose(&one).unwrap();
        let s2 = spectral_decompose(&two).unwrap();
        for (a, b) in s1.eigenvalues().iter().zip(s2.eigenvalues()) {
            assert!((2.0 * a - b).abs() <= 1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn single_pairs_combine_exactly() {
        let g = grids(10, 20);
        let b = Kumaraswamy::new(3, 1, 1, 1.0, 3.0, 2.0).unwrap();
        let p1 = vec![(vec![0.1], 0)];
        let p2 = vec![(vec![0.8], 2)];
        let both: Vec<_> = p1.iter().chain(&p2).cloned().collect();
        let sum = design_operator(&b, &p1, &g)
            .unwrap()
            .combined(&design_operator(&b, &p2, &g).unwrap())
            .unwrap();
        assert_eq!(
            design_operator(&b, &both, &g).unwrap().kernel_matrix(),
            sum.kernel_matrix()
        );
    }

    #[test]
    fn empty_pairs_rejected() {
        let g = grids(4, 4);
        assert!(matches!(
            design_operator(&uniform_basis(), &[], &g),
            Err(Error::Empty)
        ));
    }

    #[test]
    fn rank_one_spectrum() {
        let g = grids(16, 64);
        let op = design_operator(&uniform_basis(), &[(vec![0.5], 0)], &g).unwrap();
        let spec = spectral_decompose(&op).unwrap();
        assert!((spec.eigenvalues()[0] - 1.0 / 3.0).abs() < 1e-3);
        assert!(spec.eigenvalues()[1..].iter().all(|v| *v <= 1e-8));
        let e1 = &spec.eigenfunctions()[0];
        let sign = e1.values()[0].signum();
        assert!(e1.values().iter().all(|v| (sign * v - 1.0).abs() < 1e-8));
        assert!((spec.trace() - op.quadrature_trace()).abs() < 1e-8);
    }

    #[test]
    fn apply_examples() {
        let g = grids(16, 64);
        let op = design_operator(&uniform_basis(), &[(vec![0.5], 0)], &g).unwrap();
        let zero = GridFunction::zeros(g.omega.clone());
        assert!(apply_operator(&op, &zero)
            .unwrap()
            .values()
            .iter()
            .all(|v| *v == 0.0));
        let one = GridFunction::constant(g.omega.clone(), 1.0);
        let k00 = op.kernel_matrix().get(0, 0);
        let u1 = apply_operator(&op, &one).unwrap();
        assert!(u1.values().iter().all(|v| (v - k00).abs() < 1e-12));
        assert!((k00 - 1.0 / 3.0).abs() < 1e-3);
        let norm = weighted_norm(&one, &op).unwrap();
        assert!((norm - libm::sqrt(k00)).abs() < 1e-12);
        assert!((weighted_norm(&one.scaled(2.0), &op).unwrap() - 2.0 * norm).abs() < 1e-10);
        assert_eq!(weighted_norm(&zero, &op).unwrap(), 0.0);
    }

    #[test]
    fn eigenfunction_is_eigenvector_and_spectral_apply_agrees() {
        let g = grids(24, 32);
        let b = Kumaraswamy::new(3, 1, 1, 2.0, 2.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pairs: Vec<_> = (0..7)
            .map(|_| (vec![rng.random::<f64>()], rng.random_range(0..3)))
            .collect();
        let op = design_operator(&b, &pairs, &g).unwrap();
        let spec = spectral_decompose(&op).unwrap();
        let e1 = &spec.eigenfunctions()[0];
        let ue = apply_operator(&op, e1).unwrap();
        let target = e1.scaled(spec.eigenvalues()[0]);
        assert!(ue.max_abs_diff(&target).unwrap() < 1e-6);
        assert!(spec.orthonormality_error() < 1e-8);

        let theta =
            GridFunction::from_fn(g.omega.clone(), |w| 1.0 + libm::sin(5.0 * w[0])).unwrap();
        let direct = apply_operator(&op, &theta).unwrap();
        let via_spec = spec.apply(&theta).unwrap();
        assert!(direct.max_abs_diff(&via_spec).unwrap() < 1e-6);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let g = grids(8, 8);
        let op = design_operator(&uniform_basis(), &[(vec![0.5], 0)], &g).unwrap();
        let other = GridFunction::zeros(build_uniform_grid(1, 9).unwrap());
        assert_eq!(apply_operator(&op, &other), Err(Error::GridMismatch));
    }
}
