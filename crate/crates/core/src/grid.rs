//! Quadrature grids on axis-aligned boxes and functions sampled on them.
//!
//! Every integral in the crate is a weighted sum over grid nodes, so a
//! [`GridFunction`] is just the node values plus a shared handle to its grid.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Upper bound on node count accepted by [`build_uniform_grid`].
pub const MAX_GRID_NODES: usize = 10_000_000;

/// Nodes and positive weights discretising a box with its Lebesgue measure.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl QuadratureGrid {
    /// Builds a grid from flattened nodes (`len = count * dim`) and weights.
    pub fn new(
        dim: usize,
        nodes: Vec<f64>,
        weights: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 || lower.len() != dim || upper.len() != dim {
            return Err(Error::invalid("box bounds must match a positive dimension"));
        }
        if nodes.len() != weights.len() * dim {
            return Err(Error::LengthMismatch {
                expected: weights.len() * dim,
                found: nodes.len(),
            });
        }
        if weights.is_empty() {
            return Err(Error::Empty);
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid("quadrature weights must be positive"));
        }
        let measure: f64 = lower.iter().zip(&upper).map(|(l, u)| u - l).product();
        if !(measure > 0.0) {
            return Err(Error::invalid("box must have positive measure"));
        }
        let total: f64 = weights.iter().sum();
        if (total - measure).abs() > 1e-12 * measure.max(1.0) {
            return Err(Error::invalid("weights do not sum to the box measure"));
        }
        for point in nodes.chunks_exact(dim) {
            for (k, &c) in point.iter().enumerate() {
                if !(c >= lower[k] && c <= upper[k]) {
                    return Err(Error::invalid("grid node outside its box"));
                }
            }
        }
        Ok(Self {
            dim,
            nodes,
            weights,
            lower,
            upper,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Coordinates of node `i`.
    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.nodes.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn measure(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .product()
    }

    /// Scalar coordinates for one-dimensional grids.
    pub fn points_1d(&self) -> &[f64] {
        debug_assert_eq!(self.dim, 1);
        &self.nodes
    }

    /// Largest gap between consecutive nodes of a 1-D grid (or to the box ends).
    pub fn resolution_1d(&self) -> f64 {
        let pts = self.points_1d();
        let mut worst = pts[0] - self.lower[0];
        for pair in pts.windows(2) {
            worst = worst.max(pair[1] - pair[0]);
        }
        worst.max(self.upper[0] - pts[pts.len() - 1])
    }
}

/// Midpoint product rule on `[0,1]^dim` with `nodes_per_dim` points per axis.
pub fn build_uniform_grid(dim: usize, nodes_per_dim: usize) -> Result<Arc<QuadratureGrid>> {
    if dim == 0 {
        return Err(Error::invalid("dim must be at least 1"));
    }
    if nodes_per_dim < 2 {
        return Err(Error::invalid("nodes_per_dim must be at least 2"));
    }
    let total = crate::math::powf(nodes_per_dim as f64, dim as f64);
    if total > MAX_GRID_NODES as f64 {
        return Err(Error::GridTooLarge {
            nodes: total,
            limit: MAX_GRID_NODES,
        });
    }
    let count = total as usize;
    let step = 1.0 / nodes_per_dim as f64;
    let weight = crate::math::powf(step, dim as f64);
    let mut nodes = Vec::with_capacity(count * dim);
    for flat in 0..count {
        let mut rem = flat;
        let start = nodes.len();
        nodes.resize(start + dim, 0.0);
        // last axis varies fastest
        for axis in (0..dim).rev() {
            let idx = rem % nodes_per_dim;
            rem /= nodes_per_dim;
            nodes[start + axis] = (idx as f64 + 0.5) * step;
        }
    }
    let weights = alloc::vec![weight; count];
    let lower = alloc::vec![0.0; dim];
    let upper = alloc::vec![1.0; dim];
    QuadratureGrid::new(dim, nodes, weights, lower, upper).map(Arc::new)
}

/// Values of a function at the nodes of a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<QuadratureGrid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<QuadratureGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_parts_unchecked(grid: Arc<QuadratureGrid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<QuadratureGrid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: alloc::vec![0.0; n],
        }
    }

    pub fn constant(grid: Arc<QuadratureGrid>, c: f64) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: alloc::vec![c; n],
        }
    }

    pub fn from_fn(grid: Arc<QuadratureGrid>, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let values = grid.nodes().map(&mut f).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        shares_grid(&self.grid, &other.grid)
    }

    /// Quadrature integral over the grid's box.
    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| v * w)
            .sum()
    }

    /// Quadrature L² norm.
    pub fn l2_norm(&self) -> f64 {
        let sq: f64 = self
            .values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| w * v * v)
            .sum();
        crate::math::sqrt(sq)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &GridFunction) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.add_scaled(-1.0, other)
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }
}

pub(crate) fn shares_grid(a: &Arc<QuadratureGrid>, b: &Arc<QuadratureGrid>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// `Σ_i w_i f_i g_i` over a shared grid.
pub fn inner_product(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    if !f.same_grid(g) {
        return Err(Error::GridMismatch);
    }
    Ok(weighted_dot(f.grid.weights(), &f.values, &g.values))
}

#[inline]
pub(crate) fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn midpoint_nodes_in_one_dimension() {
        let g = build_uniform_grid(1, 2).unwrap();
        assert_eq!(g.points_1d(), &[0.25, 0.75]);
        assert_eq!(g.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn product_rule_in_two_dimensions() {
        let g = build_uniform_grid(2, 2).unwrap();
        assert_eq!(g.len(), 4);
        assert!(g.weights().iter().all(|&w| w == 0.25));
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(g.node(1), &[0.25, 0.75]);
    }

    #[test]
    fn midpoint_is_exact_on_affine_functions() {
        let g = build_uniform_grid(1, 4).unwrap();
        let f = GridFunction::from_fn(g, |w| w[0]).unwrap();
        assert!((f.integral() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn resource_guard_rejects_huge_grids() {
        assert!(matches!(
            build_uniform_grid(8, 10),
            Err(Error::GridTooLarge { .. })
        ));
        assert!(build_uniform_grid(1, 1).is_err());
        assert!(build_uniform_grid(0, 4).is_err());
    }

    #[test]
    fn inner_product_examples() {
        let g = build_uniform_grid(1, 100).unwrap();
        let one = GridFunction::constant(g.clone(), 1.0);
        assert!((inner_product(&one, &one).unwrap() - 1.0).abs() < 1e-12);
        let id = GridFunction::from_fn(g, |w| w[0]).unwrap();
        assert!((inner_product(&one, &id).unwrap() - 0.5).abs() < 1e-12);

        let g2 = build_uniform_grid(1, 2).unwrap();
        let sign = GridFunction::new(g2.clone(), vec![1.0, -1.0]).unwrap();
        let ones = GridFunction::constant(g2, 1.0);
        assert_eq!(inner_product(&sign, &ones).unwrap(), 0.0);
    }

    #[test]
    fn inner_product_rejects_grid_mismatch() {
        let a = GridFunction::constant(build_uniform_grid(1, 4).unwrap(), 1.0);
        let b = GridFunction::constant(build_uniform_grid(1, 5).unwrap(), 1.0);
        assert_eq!(inner_product(&a, &b), Err(Error::GridMismatch));
    }

    #[test]
    fn grid_function_rejects_non_finite() {
        let g = build_uniform_grid(1, 2).unwrap();
        assert_eq!(
            GridFunction::new(g, vec![1.0, f64::NAN]),
            Err(Error::NonFinite)
        );
    }
}
