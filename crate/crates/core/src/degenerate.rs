//! Degenerate-kernel eigensolver for integral operators on `[0, 1]`.
//!
//! The kernel is replaced by its piecewise Lagrange interpolant at mapped
//! Gauss points, `k_N(s,t) = Σ_ij k(ω_i, ω_j) z_i(s) z_j(t)`. Writing an
//! eigenfunction as `g = Σ c_i z_i` turns `λ g = C_N g` into the matrix
//! problem `λ c = B c` with `B = K·G`, `K_ij = k(ω_i, ω_j)` and
//! `G_jk = ∫ z_j z_k`. `G` is block diagonal and SPD, so with `G = L Lᵀ` the
//! symmetric matrix `Lᵀ K L` has the same eigenvalues and `c = L⁻ᵀ v`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, QuadratureGrid};
use crate::linalg::{cholesky, sym_eig, SymMatrix};
use crate::math::sqrt;
use crate::quadrature::gauss_legendre;
use crate::spectral::SpectralDecomposition;

/// Largest interpolation space accepted (`n · r`).
pub const MAX_DEGENERATE_SIZE: usize = 2000;
/// Eigenvalues with magnitude below this fraction of `λ_max` are discarded.
pub const CLAMP_RATIO: f64 = 1e-10;

/// Eigenpairs of the degenerate kernel, evaluable anywhere on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct DegenerateKernelSolution {
    intervals: usize,
    degree: usize,
    ref_nodes: Vec<f64>,
    ref_weights: Vec<f64>,
    points: Vec<f64>,
    eigenvalues: Vec<f64>,
    coefficients: Vec<Vec<f64>>,
}

/// Lagrange basis polynomial `l_i` on the reference nodes, evaluated at `t`.
fn lagrange(nodes: &[f64], i: usize, t: f64) -> f64 {
    let yi = nodes[i];
    nodes
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, yj)| (t - yj) / (yi - yj))
        .product()
}

impl DegenerateKernelSolution {
    pub fn solve(kernel: impl Fn(f64, f64) -> f64, n: usize, r: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("need at least one subinterval"));
        }
        if n * r > MAX_DEGENERATE_SIZE {
            return Err(Error::invalid("n * r exceeds 2000"));
        }
        let (ref_nodes, ref_weights) = gauss_legendre(r)?;
        let size = n * r;
        let h = 1.0 / n as f64;

        let mut points = Vec::with_capacity(size);
        for k in 0..n {
            let (left, right) = (k as f64 * h, (k + 1) as f64 * h);
            for &y in &ref_nodes {
                points.push(0.5 * (1.0 - y) * left + 0.5 * (1.0 + y) * right);
            }
        }

        let kmat = SymMatrix::from_fn(size, |i, j| kernel(points[i], points[j]));
        if kmat.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let asym = kmat.max_asymmetry();
        if asym > 1e-10 * kmat.max_abs().max(1.0) {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }

        // Gram block of one interval: (h/2) ∫_{-1}^{1} l_i l_j. The product has
        // degree 2r-2, so the r-point Gauss rule integrates it exactly.
        let mut gram = vec![0.0; r * r];
        for i in 0..r {
            for j in 0..r {
                gram[i * r + j] = 0.5
                    * h
                    * ref_nodes
                        .iter()
                        .zip(&ref_weights)
                        .map(|(&t, &w)| w * lagrange(&ref_nodes, i, t) * lagrange(&ref_nodes, j, t))
                        .sum::<f64>();
            }
        }
        let chol = cholesky(r, &gram)?;

        // K·L, exploiting the block-diagonal L
        let mut kl = vec![0.0; size * size];
        for row in 0..size {
            let krow = kmat.row(row);
            for block in 0..n {
                let base = block * r;
                for col in 0..r {
                    let mut acc = 0.0;
                    for k in col..r {
                        acc += krow[base + k] * chol[k * r + col];
                    }
                    kl[row * size + base + col] = acc;
                }
            }
        }
        // Lᵀ·(K·L)
        let mut sym = SymMatrix::zeros(size);
        for block in 0..n {
            let base = block * r;
            for rr in 0..r {
                for j in 0..size {
                    let mut acc = 0.0;
                    for k in rr..r {
                        acc += chol[k * r + rr] * kl[(base + k) * size + j];
                    }
                    sym.set(base + rr, j, acc);
                }
            }
        }
        for i in 0..size {
            for j in (i + 1)..size {
                let avg = 0.5 * (sym.get(i, j) + sym.get(j, i));
                sym.set(i, j, avg);
                sym.set(j, i, avg);
            }
        }

        let eig = sym_eig(&sym)?;
        let lambda_max = eig.values.first().copied().unwrap_or(0.0).max(0.0);
        let cut = CLAMP_RATIO * lambda_max;
        let mut eigenvalues = Vec::new();
        let mut coefficients = Vec::new();
        for (lambda, v) in eig.values.iter().zip(&eig.vectors) {
            if *lambda < -cut {
                return Err(Error::IndefiniteKernel {
                    eigenvalue: *lambda,
                });
            }
            if *lambda <= cut || lambda_max == 0.0 {
                continue;
            }
            // c = L⁻ᵀ v per block (back substitution on the upper factor)
            let mut c = vec![0.0; size];
            for block in 0..n {
                let base = block * r;
                for i in (0..r).rev() {
                    let mut acc = v[base + i];
                    for k in (i + 1)..r {
                        acc -= chol[k * r + i] * c[base + k];
                    }
                    c[base + i] = acc / chol[i * r + i];
                }
            }
            eigenvalues.push(*lambda);
            coefficients.push(c);
        }
        Ok(Self {
            intervals: n,
            degree: r,
            ref_nodes,
            ref_weights,
            points,
            eigenvalues,
            coefficients,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Interpolation points `ω_i`, interval-major.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// `g_k(s) = Σ_i c_i z_i(s)`; intervals are closed on the left.
    pub fn eigenfunction_at(&self, k: usize, s: f64) -> f64 {
        let n = self.intervals;
        let r = self.degree;
        let block = ((s * n as f64) as usize).min(n - 1);
        let left = block as f64 / n as f64;
        let right = (block + 1) as f64 / n as f64;
        let t = (2.0 * s - left - right) / (right - left);
        let c = &self.coefficients[k][block * r..(block + 1) * r];
        (0..r).map(|j| c[j] * lagrange(&self.ref_nodes, j, t)).sum()
    }

    /// `Σ_{k < terms} λ_k g_k(s) g_k(t)`.
    pub fn reconstruct(&self, s: f64, t: f64, terms: usize) -> f64 {
        (0..terms.min(self.eigenvalues.len()))
            .map(|k| {
                self.eigenvalues[k] * self.eigenfunction_at(k, s) * self.eigenfunction_at(k, t)
            })
            .sum()
    }

    /// Composite Gauss grid carrying the interpolation points.
    pub fn native_grid(&self) -> Result<Arc<QuadratureGrid>> {
        let h = 1.0 / self.intervals as f64;
        let mut weights = Vec::with_capacity(self.points.len());
        for _ in 0..self.intervals {
            weights.extend(self.ref_weights.iter().map(|w| 0.5 * h * w));
        }
        QuadratureGrid::new(1, self.points.clone(), weights, vec![0.0], vec![1.0]).map(Arc::new)
    }

    /// Eigenfunctions on the native grid, where `g_k(ω_i) = c_i` and the
    /// quadrature norm equals the exact L² norm.
    pub fn to_spectral(&self) -> Result<SpectralDecomposition> {
        let grid = self.native_grid()?;
        let functions = self
            .coefficients
            .iter()
            .map(|c| GridFunction::new(grid.clone(), c.clone()))
            .collect::<Result<Vec<_>>>()?;
        SpectralDecomposition::new(grid, self.eigenvalues.clone(), functions)
    }

    /// Eigenfunctions sampled on `grid` (1-D, inside `[0,1]`), each rescaled to
    /// unit quadrature norm on that grid.
    pub fn on_grid(&self, grid: Arc<QuadratureGrid>) -> Result<SpectralDecomposition> {
        if grid.dim() != 1 {
            return Err(Error::invalid("degenerate-kernel output grid must be 1-D"));
        }
        let mut functions = Vec::with_capacity(self.eigenvalues.len());
        for k in 0..self.eigenvalues.len() {
            let values: Vec<f64> = grid
                .points_1d()
                .iter()
                .map(|&s| self.eigenfunction_at(k, s))
                .collect();
            let f = GridFunction::new(grid.clone(), values)?;
            let norm = f.l2_norm();
            functions.push(if norm > 0.0 { f.scaled(1.0 / norm) } else { f });
        }
        SpectralDecomposition::new(grid, self.eigenvalues.clone(), functions)
    }

    /// Quadrature-exact L² norm `cᵀ G c` of eigenfunction `k`.
    pub fn exact_norm(&self, k: usize) -> f64 {
        let h = 1.0 / self.intervals as f64;
        let r = self.degree;
        let c = &self.coefficients[k];
        let sq: f64 = c
            .iter()
            .enumerate()
            .map(|(i, ci)| 0.5 * h * self.ref_weights[i % r] * ci * ci)
            .sum();
        sqrt(sq)
    }
}

/// Eigenpairs of `C[g](s) = ∫₀¹ k(s,t) g(t) dt` via `n` subintervals and
/// degree `r-1` piecewise interpolation, on the composite Gauss grid.
pub fn degenerate_kernel_eig(
    kernel: impl Fn(f64, f64) -> f64,
    n: usize,
    r: usize,
) -> Result<SpectralDecomposition> {
    DegenerateKernelSolution::solve(kernel, n, r)?.to_spectral()
}

/// Same as [`degenerate_kernel_eig`] with eigenfunctions sampled on `grid`.
pub fn degenerate_kernel_eig_on(
    kernel: impl Fn(f64, f64) -> f64,
    n: usize,
    r: usize,
    grid: Arc<QuadratureGrid>,
) -> Result<SpectralDecomposition> {
    DegenerateKernelSolution::solve(kernel, n, r)?.on_grid(grid)
}
