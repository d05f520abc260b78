use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{inner_product, shares_grid, GridFunction, QuadratureGrid};

/// Descending nonnegative eigenvalues with quadrature-orthonormal eigenfunctions.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenfunctions: Vec<GridFunction>,
    grid: Arc<QuadratureGrid>,
}

impl SpectralDecomposition {
    pub fn new(
        grid: Arc<QuadratureGrid>,
        eigenvalues: Vec<f64>,
        eigenfunctions: Vec<GridFunction>,
    ) -> Result<Self> {
        if eigenvalues.len() != eigenfunctions.len() {
            return Err(Error::LengthMismatch {
                expected: eigenvalues.len(),
                found: eigenfunctions.len(),
            });
        }
        if eigenvalues.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("eigenvalues must be finite and nonnegative"));
        }
        if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::invalid("eigenvalues must be sorted descending"));
        }
        if eigenfunctions.iter().any(|f| !shares_grid(f.grid(), &grid)) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            eigenvalues,
            eigenfunctions,
            grid,
        })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenfunctions(&self) -> &[GridFunction] {
        &self.eigenfunctions
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// `⟨θ, e_k⟩` for every stored eigenfunction.
    pub fn coefficients(&self, theta: &GridFunction) -> Result<Vec<f64>> {
        self.eigenfunctions
            .iter()
            .map(|e| inner_product(theta, e))
            .collect()
    }

    /// `Σ_k c_k e_k` over the first `coeffs.len()` eigenfunctions.
    pub fn synthesize(&self, coeffs: &[f64]) -> GridFunction {
        let mut values = alloc::vec![0.0; self.grid.len()];
        for (c, e) in coeffs.iter().zip(&self.eigenfunctions) {
            if *c == 0.0 {
                continue;
            }
            for (v, ev) in values.iter_mut().zip(e.values()) {
                *v += c * ev;
            }
        }
        GridFunction::from_parts_unchecked(self.grid.clone(), values)
    }

    /// Operator action through the spectral representation `Σ λ_k ⟨θ,e_k⟩ e_k`.
    pub fn apply(&self, theta: &GridFunction) -> Result<GridFunction> {
        let coeffs: Vec<f64> = self
            .coefficients(theta)?
            .into_iter()
            .zip(&self.eigenvalues)
            .map(|(c, l)| c * l)
            .collect();
        Ok(self.synthesize(&coeffs))
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (i, ei) in self.eigenfunctions.iter().enumerate() {
            for (j, ej) in self.eigenfunctions.iter().enumerate().skip(i) {
                let dot = inner_product(ei, ej).unwrap_or(f64::INFINITY);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// Keeps the leading `k` eigenpairs.
    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.len());
        Self {
            eigenvalues: self.eigenvalues[..k].to_vec(),
            eigenfunctions: self.eigenfunctions[..k].to_vec(),
            grid: self.grid.clone(),
        }
    }

    /// `Π_{i ≤ cutoff} (1 + λ_i)`.
    pub fn functional_determinant(&self, cutoff: usize) -> Result<f64> {
        if cutoff > self.len() {
            return Err(Error::invalid("cutoff exceeds eigenvalue count"));
        }
        Ok(self.eigenvalues[..cutoff].iter().map(|l| 1.0 + l).product())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_uniform_grid;
    use alloc::vec;

    #[test]
    fn determinant_of_empty_truncation_is_one() {
        let g = build_uniform_grid(1, 4).unwrap();
        let one = GridFunction::constant(g.clone(), 1.0);
        let spec = SpectralDecomposition::new(g, vec![1.0 / 3.0], vec![one]).unwrap();
        assert_eq!(spec.functional_determinant(0).unwrap(), 1.0);
        assert!((spec.functional_determinant(1).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!(spec.functional_determinant(2).is_err());
    }

    #[test]
    fn rejects_unsorted_or_negative() {
        let g = build_uniform_grid(1, 2).unwrap();
        let e = |v: Vec<f64>| GridFunction::new(g.clone(), v).unwrap();
        assert!(SpectralDecomposition::new(
            g.clone(),
            vec![0.1, 0.2],
            vec![e(vec![1.0, 1.0]), e(vec![1.0, -1.0])]
        )
        .is_err());
        assert!(
            SpectralDecomposition::new(g.clone(), vec![-0.1], vec![e(vec![1.0, 1.0])]).is_err()
        );
        assert!(SpectralDecomposition::new(g.clone(), vec![0.1], vec![]).is_err());
    }
}
