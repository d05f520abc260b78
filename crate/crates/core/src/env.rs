//! Synthetic ground-truth worlds: a basis family, a hidden density `θ*`,
//! uniform contexts, and outcomes drawn by inverting `F*` on the S grid.

use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;

use crate::basis::{CdfBasis, FiniteRank, Kumaraswamy, PhiTable, Rank1Uniform};
use crate::error::{Error, Result};
use crate::functional::UtilityFunctional;
use crate::grid::{build_uniform_grid, GridFunction, QuadratureGrid};
use crate::math::exp;

/// The Ω grid (coefficient domain) and S grid (outcome space).
#[derive(Debug, Clone)]
pub struct Grids {
    pub omega: Arc<QuadratureGrid>,
    pub s: Arc<QuadratureGrid>,
}

impl Grids {
    /// Midpoint grids on `[0,1]^omega_dim` and `[0,1]`.
    pub fn uniform(omega_dim: usize, omega_nodes: usize, s_nodes: usize) -> Result<Self> {
        Ok(Self {
            omega: build_uniform_grid(omega_dim, omega_nodes)?,
            s: build_uniform_grid(1, s_nodes)?,
        })
    }
}

/// One observation `(x_t, a_t, y_t)` with its round index.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub round: usize,
    pub context: Vec<f64>,
    pub action: usize,
    pub outcome: f64,
}

/// Basis families available to [`make_catalog_env`].
#[derive(Debug, Clone, PartialEq)]
pub enum CatalogKind {
    Rank1Uniform,
    Kumaraswamy {
        alpha_amp: f64,
        beta_amp: f64,
    },
    FiniteRank {
        rank: usize,
        alpha_amp: f64,
        beta_amp: f64,
    },
}

impl CatalogKind {
    /// Resolves a catalog name; amplitudes and rank are ignored where unused.
    pub fn from_name(name: &str, rank: usize, alpha_amp: f64, beta_amp: f64) -> Result<Self> {
        match name {
            "rank1-uniform" => Ok(Self::Rank1Uniform),
            "kumaraswamy" => Ok(Self::Kumaraswamy {
                alpha_amp,
                beta_amp,
            }),
            "finite-rank" | "finite-rank-r" => Ok(Self::FiniteRank {
                rank,
                alpha_amp,
                beta_amp,
            }),
            other => Err(Error::UnknownCatalog(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Rank1Uniform => "rank1-uniform",
            Self::Kumaraswamy { .. } => "kumaraswamy",
            Self::FiniteRank { .. } => "finite-rank",
        }
    }
}

/// Gaussian bump on the mean coordinate of `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
    pub weight: f64,
}

/// Hidden coefficient density.
#[derive(Debug, Clone, PartialEq)]
pub enum ThetaSpec {
    Uniform,
    /// Mixture of bumps, clipped at zero and renormalised to unit integral.
    Bumps(Vec<Bump>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogSpec {
    pub kind: CatalogKind,
    pub action_count: usize,
    pub context_dim: usize,
    pub m_bound: f64,
    pub theta: ThetaSpec,
}

impl CatalogSpec {
    pub fn new(kind: CatalogKind, action_count: usize, context_dim: usize) -> Self {
        Self {
            kind,
            action_count,
            context_dim,
            m_bound: 2.0,
            theta: ThetaSpec::Uniform,
        }
    }
}

/// A synthetic contextual world.
#[derive(Debug, Clone)]
pub struct Environment {
    basis: Arc<dyn CdfBasis>,
    theta_star: GridFunction,
    grids: Grids,
    action_count: usize,
    context_dim: usize,
}

/// Builds a catalog world on `grids`.
pub fn make_catalog_env(spec: &CatalogSpec, grids: Grids) -> Result<Environment> {
    if spec.action_count == 0 {
        return Err(Error::invalid("need at least one action"));
    }
    if !(spec.m_bound >= 1.0) {
        return Err(Error::InfeasibleTheta("M must be at least 1".into()));
    }
    let omega_dim = grids.omega.dim();
    let k = spec.action_count;
    let d = spec.context_dim;
    let m = spec.m_bound;
    let basis: Arc<dyn CdfBasis> = match spec.kind {
        CatalogKind::Rank1Uniform => {
            if omega_dim != 1 {
                return Err(Error::invalid("rank1-uniform uses a 1-D Ω"));
            }
            Arc::new(Rank1Uniform::new(k, d, m))
        }
        CatalogKind::Kumaraswamy {
            alpha_amp,
            beta_amp,
        } => Arc::new(Kumaraswamy::new(k, d, omega_dim, alpha_amp, beta_amp, m)?),
        CatalogKind::FiniteRank {
            rank,
            alpha_amp,
            beta_amp,
        } => Arc::new(FiniteRank::new(
            k, d, omega_dim, rank, alpha_amp, beta_amp, m,
        )?),
    };
    let theta_star = build_theta(&spec.theta, &grids.omega, m)?;
    Environment::new(basis, theta_star, grids)
}

fn build_theta(spec: &ThetaSpec, omega: &Arc<QuadratureGrid>, m: f64) -> Result<GridFunction> {
    match spec {
        ThetaSpec::Uniform => Ok(GridFunction::constant(omega.clone(), 1.0)),
        ThetaSpec::Bumps(bumps) => {
            if bumps.is_empty() || bumps.iter().any(|b| !(b.width > 0.0)) {
                return Err(Error::InfeasibleTheta("bumps need positive widths".into()));
            }
            let raw = GridFunction::from_fn(omega.clone(), |w| {
                let wb = w.iter().sum::<f64>() / w.len() as f64;
                let v: f64 = bumps
                    .iter()
                    .map(|b| {
                        let z = (wb - b.center) / b.width;
                        b.weight * exp(-0.5 * z * z)
                    })
                    .sum();
                v.max(0.0)
            })?;
            let mass = raw.integral();
            if !(mass > 0.0) {
                return Err(Error::InfeasibleTheta("bump mixture has no mass".into()));
            }
            let theta = raw.scaled(1.0 / mass);
            if theta.l2_norm() > m + 1e-12 {
                return Err(Error::InfeasibleTheta(alloc::format!(
                    "L2 norm {:.4} exceeds M = {m}",
                    theta.l2_norm()
                )));
            }
            Ok(theta)
        }
    }
}

impl Environment {
    pub fn new(basis: Arc<dyn CdfBasis>, theta_star: GridFunction, grids: Grids) -> Result<Self> {
        if !crate::grid::shares_grid(theta_star.grid(), &grids.omega) {
            return Err(Error::GridMismatch);
        }
        if grids.s.dim() != 1 {
            return Err(Error::invalid("outcome space must be one-dimensional"));
        }
        let c = *basis.constants();
        if theta_star.values().iter().any(|v| *v < 0.0)
            || (theta_star.integral() - 1.0).abs() > 1e-9
            || theta_star.l2_norm() > c.coeff_norm_bound_m + 1e-9
        {
            return Err(Error::InfeasibleTheta("θ* must lie in C".into()));
        }
        Ok(Self {
            action_count: c.action_count,
            context_dim: c.context_dim,
            basis,
            theta_star,
            grids,
        })
    }

    pub fn basis(&self) -> &dyn CdfBasis {
        self.basis.as_ref()
    }

    pub fn basis_arc(&self) -> Arc<dyn CdfBasis> {
        self.basis.clone()
    }

    pub fn theta_star(&self) -> &GridFunction {
        &self.theta_star
    }

    pub fn grids(&self) -> &Grids {
        &self.grids
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn context_dim(&self) -> usize {
        self.context_dim
    }

    /// Draws a context uniformly from the unit cube.
    pub fn sample_context<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.context_dim).map(|_| rng.random::<f64>()).collect()
    }

    pub fn phi_table(&self, x: &[f64], a: usize) -> Result<PhiTable> {
        PhiTable::new(self.basis.as_ref(), x, a, &self.grids)
    }

    /// `F*(x, a, ·)` on the S grid.
    pub fn true_cdf(&self, x: &[f64], a: usize) -> Result<GridFunction> {
        let table = self.phi_table(x, a)?;
        Ok(self.cdf_from_table(&table))
    }

    pub(crate) fn cdf_from_table(&self, table: &PhiTable) -> GridFunction {
        let values = table.mix(self.theta_star.values(), self.grids.omega.weights());
        GridFunction::from_parts_unchecked(self.grids.s.clone(), values)
    }

    /// Inverse-CDF draw snapped to the S nodes.
    pub fn sample_outcome<R: Rng + ?Sized>(&self, x: &[f64], a: usize, rng: &mut R) -> Result<f64> {
        Ok(self.outcome_sampler(x, a)?.draw(rng))
    }

    /// Sampler with `F*(x, a, ·)` tabulated once, for repeated draws.
    pub fn outcome_sampler(&self, x: &[f64], a: usize) -> Result<OutcomeSampler> {
        Ok(OutcomeSampler {
            cdf: self.true_cdf(x, a)?,
        })
    }

    /// Exact utilities `T(F*(x, a))` for every action.
    pub fn true_utilities(&self, functional: &UtilityFunctional, x: &[f64]) -> Result<Vec<f64>> {
        (0..self.action_count)
            .map(|a| functional.evaluate(&self.true_cdf(x, a)?))
            .collect()
    }

    /// `argmax_a T(F*(x, a))`, lowest index on ties.
    pub fn optimal_action(
        &self,
        functional: &UtilityFunctional,
        x: &[f64],
    ) -> Result<(usize, f64)> {
        Ok(argmax(&self.true_utilities(functional, x)?))
    }

    /// `n` i.i.d. samples with uniform contexts and uniform actions.
    pub fn sample_dataset<R: Rng + ?Sized>(
        &self,
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<SampleRecord>> {
        (0..n)
            .map(|t| {
                let context = self.sample_context(rng);
                let action = rng.random_range(0..self.action_count);
                let outcome = self.sample_outcome(&context, action, rng)?;
                Ok(SampleRecord {
                    round: t + 1,
                    context,
                    action,
                    outcome,
                })
            })
            .collect()
    }
}

/// Inverse-CDF sampler over a tabulated grid CDF.
#[derive(Debug, Clone)]
pub struct OutcomeSampler {
    cdf: GridFunction,
}

impl OutcomeSampler {
    pub fn cdf(&self) -> &GridFunction {
        &self.cdf
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        invert_grid_cdf(&self.cdf, rng.random::<f64>())
    }
}

/// Smallest S node whose CDF value reaches `u`.
pub fn invert_grid_cdf(cdf: &GridFunction, u: f64) -> f64 {
    let values = cdf.values();
    let idx = values.partition_point(|f| *f < u).min(values.len() - 1);
    cdf.grid().node(idx)[0]
}

/// Index of the largest value, lowest index among exact ties.
pub(crate) fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    (best, values[best])
}

/// Free-function form of [`Environment::true_cdf`].
pub fn true_cdf(env: &Environment, x: &[f64], a: usize) -> Result<GridFunction> {
    env.true_cdf(x, a)
}

/// Free-function form of [`Environment::sample_outcome`].
pub fn sample_outcome<R: Rng + ?Sized>(
    env: &Environment,
    x: &[f64],
    a: usize,
    rng: &mut R,
) -> Result<f64> {
    env.sample_outcome(x, a, rng)
}

/// Free-function form of [`Environment::optimal_action`].
pub fn optimal_action(
    env: &Environment,
    functional: &UtilityFunctional,
    x: &[f64],
) -> Result<(usize, f64)> {
    env.optimal_action(functional, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::point_spectrum;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grids() -> Grids {
        Grids::uniform(1, 32, 64).unwrap()
    }

    #[test]
    fn rank1_world_has_uniform_cdf() {
        let spec = CatalogSpec::new(CatalogKind::Rank1Uniform, 3, 2);
        let env = make_catalog_env(&spec, grids()).unwrap();
        let f = env.true_cdf(&[0.1, 0.9], 2).unwrap();
        let s = env.grids().s.points_1d();
        for (k, v) in f.values().iter().enumerate().take(s.len() - 1) {
            assert!((v - s[k]).abs() < 1e-12);
        }
        assert_eq!(*f.values().last().unwrap(), 1.0);
        let (a, _) = env
            .optimal_action(&UtilityFunctional::Mean, &[0.1, 0.9])
            .unwrap();
        assert_eq!(a, 0);
    }

    #[test]
    fn finite_rank_spectrum_is_bounded_by_rank() {
        let spec = CatalogSpec::new(
            CatalogKind::FiniteRank {
                rank: 8,
                alpha_amp: 2.0,
                beta_amp: 2.0,
            },
            5,
            1,
        );
        let g = grids();
        let env = make_catalog_env(&spec, g.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let x = env.sample_context(&mut rng);
            let a = rng.random_range(0..5);
            let sp = point_spectrum(env.basis(), &x, a, &g).unwrap();
            let big = sp.eigenvalues().iter().filter(|v| **v > 1e-10).count();
            assert!(big <= 8, "{big}");
        }
    }

    #[test]
    fn degenerate_kumaraswamy_matches_rank1() {
        let g = grids();
        let k0 = make_catalog_env(
            &CatalogSpec::new(
                CatalogKind::Kumaraswamy {
                    alpha_amp: 0.0,
                    beta_amp: 0.0,
                },
                2,
                1,
            ),
            g.clone(),
        )
        .unwrap();
        let r1 = make_catalog_env(&CatalogSpec::new(CatalogKind::Rank1Uniform, 2, 1), g).unwrap();
        let a = k0.true_cdf(&[0.4], 1).unwrap();
        let b = r1.true_cdf(&[0.4], 1).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
    }

    #[test]
    fn uniform_theta_gives_average_of_basis() {
        let g = grids();
        let spec = CatalogSpec::new(
            CatalogKind::Kumaraswamy {
                alpha_amp: 2.0,
                beta_amp: 1.0,
            },
            3,
            1,
        );
        let env = make_catalog_env(&spec, g.clone()).unwrap();
        let f = env.true_cdf(&[0.25], 1).unwrap();
        let table = env.phi_table(&[0.25], 1).unwrap();
        for k in 0..g.s.len() {
            let avg: f64 = (0..g.omega.len())
                .map(|i| g.omega.weights()[i] * table.row(i)[k])
                .sum();
            assert!((avg - f.values()[k]).abs() < 1e-14);
        }
        assert!(f.values().windows(2).all(|p| p[0] <= p[1] + 1e-15));
    }

    #[test]
    fn inverse_cdf_examples() {
        let g = build_uniform_grid(1, 10).unwrap();
        let uniform = GridFunction::from_fn(g.clone(), |s| s[0] + 0.05).unwrap();
        assert!((invert_grid_cdf(&uniform, 0.3) - 0.25).abs() < 1e-12);
        let point = GridFunction::constant(g.clone(), 1.0);
        for u in [0.0, 0.4, 0.999] {
            assert_eq!(invert_grid_cdf(&point, u), 0.05);
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let spec = CatalogSpec::new(
            CatalogKind::Kumaraswamy {
                alpha_amp: 2.0,
                beta_amp: 2.0,
            },
            3,
            2,
        );
        let env = make_catalog_env(&spec, grids()).unwrap();
        let a = env
            .sample_dataset(50, &mut ChaCha8Rng::seed_from_u64(9))
            .unwrap();
        let b = env
            .sample_dataset(50, &mut ChaCha8Rng::seed_from_u64(9))
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bump_theta_is_feasible_or_rejected() {
        let g = grids();
        let mut spec = CatalogSpec::new(CatalogKind::Rank1Uniform, 1, 1);
        spec.theta = ThetaSpec::Bumps(vec![
            Bump {
                center: 0.3,
                width: 0.3,
                weight: 1.0,
            },
            Bump {
                center: 0.8,
                width: 0.2,
                weight: 0.5,
            },
        ]);
        let env = make_catalog_env(&spec, g.clone()).unwrap();
        assert!((env.theta_star().integral() - 1.0).abs() < 1e-12);
        spec.theta = ThetaSpec::Bumps(vec![Bump {
            center: 0.5,
            width: 0.01,
            weight: 1.0,
        }]);
        assert!(matches!(
            make_catalog_env(&spec, g),
            Err(Error::InfeasibleTheta(_))
        ));
    }

    #[test]
    fn unknown_catalog_name() {
        assert!(matches!(
            CatalogKind::from_name("gamma", 1, 1.0, 1.0),
            Err(Error::UnknownCatalog(_))
        ));
    }

    #[test]
    fn dominating_action_wins_under_mean() {
        use crate::basis::{BasisConstants, FnBasis};
        let g = grids();
        let c = BasisConstants {
            lipschitz_l0: 0.0,
            kernel_floor_eta: 0.1,
            coeff_norm_bound_m: 2.0,
            covering_constant_a: 1.0,
            context_dim: 1,
            omega_dim: 1,
            action_count: 4,
        };
        // smaller CDF means stochastically larger outcome
        let basis = FnBasis::new("dominance", c, |_, a, _, s| {
            let p = if a == 2 { 3.0 } else { 1.0 + 0.3 * a as f64 };
            libm::pow(s, p)
        });
        let env = Environment::new(
            Arc::new(basis),
            GridFunction::constant(g.omega.clone(), 1.0),
            g,
        )
        .unwrap();
        let (a, _) = env
            .optimal_action(&UtilityFunctional::Mean, &[0.5])
            .unwrap();
        assert_eq!(a, 2);
    }
}
