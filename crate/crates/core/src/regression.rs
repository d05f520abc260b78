//! The functional regression oracle: truncated spectral pseudo-inverse of
//! the design operator applied to the empirical target, then projected
//! onto the bounded densities.

use alloc::vec::Vec;

use crate::basis::{CdfBasis, PhiTable};
use crate::env::{Grids, SampleRecord};
use crate::error::{Error, Result};
use crate::grid::{inner_product, weighted_dot, GridFunction};
use crate::math::powf;
use crate::operator::{DesignOperator, KernelAccumulator};
use crate::projection::{project_to_c, CoefficientEstimate};
use crate::spectral::SpectralDecomposition;

/// Spectral truncation level for a sample of size `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationPlan {
    pub epsilon: f64,
    /// `n · ε`.
    pub threshold: f64,
    /// Number of eigenvalues at or above the threshold.
    pub n_eps: usize,
    pub retained_eigenvalues: Vec<f64>,
}

/// Truncation at `ε = n^{−2/(γ+2)}`, i.e. threshold `n^{γ/(γ+2)}`.
pub fn select_truncation(
    spec: &SpectralDecomposition,
    n: usize,
    gamma: f64,
) -> Result<TruncationPlan> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid("gamma must lie in (0, 1]"));
    }
    let epsilon = powf(n as f64, -2.0 / (gamma + 2.0));
    select_truncation_with_epsilon(spec, n, epsilon)
}

/// Truncation at a caller-chosen `ε`.
pub fn select_truncation_with_epsilon(
    spec: &SpectralDecomposition,
    n: usize,
    epsilon: f64,
) -> Result<TruncationPlan> {
    if n == 0 {
        return Err(Error::Empty);
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    let threshold = n as f64 * epsilon;
    let n_eps = spec.eigenvalues().partition_point(|l| *l >= threshold);
    Ok(TruncationPlan {
        epsilon,
        threshold,
        n_eps,
        retained_eigenvalues: spec.eigenvalues()[..n_eps].to_vec(),
    })
}

/// `Σ_{i ≤ N_ε} λ_i⁻¹ ⟨g, e_i⟩ e_i`.
pub fn pseudo_inverse_apply(
    spec: &SpectralDecomposition,
    plan: &TruncationPlan,
    g: &GridFunction,
) -> Result<GridFunction> {
    if plan.n_eps > spec.len() {
        return Err(Error::invalid("truncation plan exceeds the spectrum"));
    }
    let mut out = alloc::vec![0.0; spec.grid().len()];
    for (lambda, e) in spec.eigenvalues()[..plan.n_eps]
        .iter()
        .zip(spec.eigenfunctions())
    {
        let c = inner_product(g, e)? / lambda;
        for (o, v) in out.iter_mut().zip(e.values()) {
            *o += c * v;
        }
    }
    GridFunction::new(spec.grid().clone(), out)
}

/// `1{y ≤ s_k}` on the S nodes, with the last node closed to 1.
pub fn indicator_row(y: f64, s_nodes: &[f64]) -> Vec<f64> {
    let last = s_nodes.len() - 1;
    s_nodes
        .iter()
        .enumerate()
        .map(|(k, s)| if k == last || y <= *s { 1.0 } else { 0.0 })
        .collect()
}

fn check_outcome(y: f64, grids: &Grids) -> Result<()> {
    let (lo, hi) = (grids.s.lower()[0], grids.s.upper()[0]);
    if !(y >= lo && y <= hi) {
        return Err(Error::OutcomeOutOfRange { y });
    }
    Ok(())
}

/// Design operator, empirical target and indicator mass built in one pass.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub operator: DesignOperator,
    pub target: GridFunction,
    /// `Σ_j Σ_k m_k 1{y_j ≤ s_k}`.
    pub indicator_mass: f64,
}

pub fn assemble(data: &[SampleRecord], basis: &dyn CdfBasis, grids: &Grids) -> Result<Assembly> {
    if data.is_empty() {
        return Err(Error::Empty);
    }
    let s_nodes = grids.s.points_1d();
    let s_weights = grids.s.weights();
    let mut acc = KernelAccumulator::new(grids.omega.len(), s_weights);
    let mut target = alloc::vec![0.0; grids.omega.len()];
    let mut indicator_mass = 0.0;
    for rec in data {
        check_outcome(rec.outcome, grids)?;
        let table = PhiTable::new(basis, &rec.context, rec.action, grids)?;
        let ind: Vec<f64> = indicator_row(rec.outcome, s_nodes)
            .iter()
            .zip(s_weights)
            .map(|(i, w)| i * w)
            .collect();
        indicator_mass += ind.iter().sum::<f64>();
        for (i, t) in target.iter_mut().enumerate() {
            *t += table
                .row(i)
                .iter()
                .zip(&ind)
                .map(|(p, q)| p * q)
                .sum::<f64>();
        }
        acc.add(&table);
    }
    Ok(Assembly {
        operator: DesignOperator::new(acc.finish(), grids.omega.clone(), data.len())?,
        target: GridFunction::new(grids.omega.clone(), target)?,
        indicator_mass,
    })
}

impl Assembly {
    /// `Σ I − 2⟨θ, target⟩ + ⟨θ, U θ⟩`.
    pub fn loss(&self, theta: &GridFunction) -> Result<f64> {
        let u = crate::operator::apply_operator(&self.operator, theta)?;
        let w = theta.grid().weights();
        Ok(
            self.indicator_mass - 2.0 * inner_product(theta, &self.target)?
                + weighted_dot(w, theta.values(), u.values()),
        )
    }
}

/// `Σ_j Σ_k m_k 1{y_j ≤ s_k} φ(x_j, a_j, w, s_k)`.
pub fn empirical_target(
    data: &[SampleRecord],
    basis: &dyn CdfBasis,
    grids: &Grids,
) -> Result<GridFunction> {
    let s_nodes = grids.s.points_1d();
    let s_weights = grids.s.weights();
    let mut target = alloc::vec![0.0; grids.omega.len()];
    for rec in data {
        check_outcome(rec.outcome, grids)?;
        let table = PhiTable::new(basis, &rec.context, rec.action, grids)?;
        let ind = indicator_row(rec.outcome, s_nodes);
        for (i, t) in target.iter_mut().enumerate() {
            *t += table
                .row(i)
                .iter()
                .zip(&ind)
                .zip(s_weights)
                .map(|((p, q), w)| p * q * w)
                .sum::<f64>();
        }
    }
    GridFunction::new(grids.omega.clone(), target)
}

/// `θ_D = U_D^† (empirical target)`.
pub fn solve_least_squares(
    data: &[SampleRecord],
    basis: &dyn CdfBasis,
    grids: &Grids,
    spec: &SpectralDecomposition,
    plan: &TruncationPlan,
) -> Result<GridFunction> {
    let target = empirical_target(data, basis, grids)?;
    pseudo_inverse_apply(spec, plan, &target)
}

/// `Σ_j ‖1{y_j ≤ ·} − F_θ(x_j, a_j, ·)‖²_{L²(S)}`, evaluated directly.
pub fn loss(
    theta: &GridFunction,
    data: &[SampleRecord],
    basis: &dyn CdfBasis,
    grids: &Grids,
) -> Result<f64> {
    if !crate::grid::shares_grid(theta.grid(), &grids.omega) {
        return Err(Error::GridMismatch);
    }
    let s_nodes = grids.s.points_1d();
    let mut total = 0.0;
    for rec in data {
        let table = PhiTable::new(basis, &rec.context, rec.action, grids)?;
        let f = table.mix(theta.values(), grids.omega.weights());
        let ind = indicator_row(rec.outcome, s_nodes);
        let d: Vec<f64> = ind.iter().zip(&f).map(|(i, v)| i - v).collect();
        total += weighted_dot(grids.s.weights(), &d, &d);
    }
    Ok(total)
}

/// Knobs for [`fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionConfig {
    pub gamma: f64,
    pub m_bound: f64,
    /// Replaces `n^{−2/(γ+2)}` when set.
    pub epsilon_override: Option<f64>,
}

/// Everything the oracle computed on the way to its estimate.
#[derive(Debug, Clone)]
pub struct RegressionFit {
    pub estimate: CoefficientEstimate,
    pub unprojected: GridFunction,
    pub plan: TruncationPlan,
    pub assembly: Assembly,
}

pub fn fit(
    data: &[SampleRecord],
    basis: &dyn CdfBasis,
    grids: &Grids,
    config: &RegressionConfig,
) -> Result<RegressionFit> {
    let assembly = assemble(data, basis, grids)?;
    let spec = assembly.operator.spectrum()?;
    let plan = match config.epsilon_override {
        Some(eps) => select_truncation_with_epsilon(spec, data.len(), eps)?,
        None => select_truncation(spec, data.len(), config.gamma)?,
    };
    let unprojected = pseudo_inverse_apply(spec, &plan, &assembly.target)?;
    let mut estimate = project_to_c(&unprojected, &assembly.operator, config.m_bound)?;
    estimate.diagnostics.loss = Some(assembly.loss(&estimate.theta_hat)?);
    estimate.diagnostics.n_eps = Some(plan.n_eps);
    Ok(RegressionFit {
        estimate,
        unprojected,
        plan,
        assembly,
    })
}

/// End-to-end oracle returning a density in `C`.
pub fn regress(
    data: &[SampleRecord],
    basis: &dyn CdfBasis,
    gamma: f64,
    m_bound: f64,
    grids: &Grids,
) -> Result<CoefficientEstimate> {
    let config = RegressionConfig {
        gamma,
        m_bound,
        epsilon_override: None,
    };
    Ok(fit(data, basis, grids, &config)?.estimate)
}

/// `F̂(x, a, s_k) = Σ_i ν_i θ̂_i φ(x, a, w_i, s_k)`.
pub fn predict_cdf(
    estimate: &CoefficientEstimate,
    basis: &dyn CdfBasis,
    x: &[f64],
    a: usize,
    grids: &Grids,
) -> Result<GridFunction> {
    predict_from_theta(&estimate.theta_hat, basis, x, a, grids)
}

pub fn predict_from_theta(
    theta: &GridFunction,
    basis: &dyn CdfBasis,
    x: &[f64],
    a: usize,
    grids: &Grids,
) -> Result<GridFunction> {
    if !crate::grid::shares_grid(theta.grid(), &grids.omega) {
        return Err(Error::GridMismatch);
    }
    let table = PhiTable::new(basis, x, a, grids)?;
    GridFunction::new(
        grids.s.clone(),
        table.mix(theta.values(), grids.omega.weights()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BasisConstants, FnBasis};
    use crate::env::{make_catalog_env, CatalogKind, CatalogSpec};
    use crate::grid::build_uniform_grid;
    use crate::operator::{design_operator, weighted_norm_sq};
    use alloc::sync::Arc;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn consts() -> BasisConstants {
        BasisConstants {
            lipschitz_l0: 0.0,
            kernel_floor_eta: 1.0 / 3.0,
            coeff_norm_bound_m: 2.0,
            covering_constant_a: 1.0,
            context_dim: 1,
            omega_dim: 1,
            action_count: 1,
        }
    }

    fn rec(y: f64) -> SampleRecord {
        SampleRecord {
            round: 1,
            context: vec![0.5],
            action: 0,
            outcome: y,
        }
    }

    fn spec_with(values: Vec<f64>) -> SpectralDecomposition {
        let g = build_uniform_grid(1, values.len()).unwrap();
        let fns = (0..values.len())
            .map(|i| {
                let mut v = vec![0.0; values.len()];
                v[i] = libm::sqrt(values.len() as f64);
                GridFunction::new(g.clone(), v).unwrap()
            })
            .collect();
        SpectralDecomposition::new(g, values, fns).unwrap()
    }

    #[test]
    fn truncation_examples() {
        let s = spec_with(vec![5.0, 3.0, 1.0, 0.2]);
        let plan = select_truncation(&s, 1, 1.0).unwrap();
        assert_eq!(plan.threshold, 1.0);
        assert_eq!(plan.n_eps, 3);
        let none = select_truncation(&spec_with(vec![0.5, 0.1]), 1, 1.0).unwrap();
        assert_eq!(none.n_eps, 0);
        let p64 = select_truncation(&s, 64, 1.0).unwrap();
        assert!((p64.epsilon - 1.0 / 16.0).abs() < 1e-12);
        assert!((p64.threshold - 4.0).abs() < 1e-12);
        assert_eq!(p64.n_eps, 1);
    }

    #[test]
    fn pseudo_inverse_examples() {
        let s = spec_with(vec![2.0, 0.5]);
        let plan = select_truncation_with_epsilon(&s, 1, 1.0).unwrap();
        let e1 = &s.eigenfunctions()[0];
        let out = pseudo_inverse_apply(&s, &plan, e1).unwrap();
        assert!(out.max_abs_diff(&e1.scaled(0.5)).unwrap() < 1e-12);
        let e2 = &s.eigenfunctions()[1];
        let zero = pseudo_inverse_apply(&s, &plan, e2).unwrap();
        assert!(zero.values().iter().all(|v| *v == 0.0));
        let back = pseudo_inverse_apply(&s, &plan, &e1.scaled(2.0)).unwrap();
        assert!(back.max_abs_diff(e1).unwrap() < 1e-8);
    }

    #[test]
    fn target_examples() {
        let grids = Grids::uniform(1, 8, 200).unwrap();
        let s_basis = FnBasis::new("s", consts(), |_, _, _, s| s);
        let t = empirical_target(&[rec(0.0)], &s_basis, &grids).unwrap();
        assert!(t.values().iter().all(|v| (v - 0.5).abs() < 1e-2));
        let one = FnBasis::new("one", consts(), |_, _, _, _| 1.0);
        let t = empirical_target(&[rec(0.0)], &one, &grids).unwrap();
        assert!(t.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let t = empirical_target(&[rec(1.0)], &one, &grids).unwrap();
        assert!(t.values().iter().all(|v| (v - 1.0 / 200.0).abs() < 1e-12));
        assert!(matches!(
            empirical_target(&[rec(1.5)], &one, &grids),
            Err(Error::OutcomeOutOfRange { .. })
        ));
    }

    #[test]
    fn least_squares_examples() {
        let grids = Grids::uniform(1, 8, 400).unwrap();
        let basis = FnBasis::new("s", consts(), |_, _, _, s| s);
        let data = vec![rec(0.0)];
        let op = design_operator(&basis, &[(vec![0.5], 0)], &grids).unwrap();
        let spec = op.spectrum().unwrap();
        let plan = select_truncation_with_epsilon(spec, 1, 0.1).unwrap();
        let theta = solve_least_squares(&data, &basis, &grids, spec, &plan).unwrap();
        assert!(theta.values().iter().all(|v| (v - 1.5).abs() < 1e-2));
        let empty = select_truncation_with_epsilon(spec, 1, 10.0).unwrap();
        let zero = solve_least_squares(&data, &basis, &grids, spec, &empty).unwrap();
        assert!(zero.values().iter().all(|v| *v == 0.0));
    }

    fn kumaraswamy_data(n: usize, seed: u64) -> (crate::env::Environment, Vec<SampleRecord>) {
        let grids = Grids::uniform(1, 16, 32).unwrap();
        let spec = CatalogSpec::new(
            CatalogKind::Kumaraswamy {
                alpha_amp: 2.0,
                beta_amp: 2.0,
            },
            3,
            1,
        );
        let env = make_catalog_env(&spec, grids).unwrap();
        let data = env
            .sample_dataset(n, &mut ChaCha8Rng::seed_from_u64(seed))
            .unwrap();
        (env, data)
    }

    #[test]
    fn duplicated_dataset_gives_same_solution() {
        let (env, data) = kumaraswamy_data(12, 3);
        let mut doubled = data.clone();
        doubled.extend(data.iter().cloned());
        let grids = env.grids();
        let a = assemble(&data, env.basis(), grids).unwrap();
        let b = assemble(&doubled, env.basis(), grids).unwrap();
        let sa = a.operator.spectrum().unwrap();
        let sb = b.operator.spectrum().unwrap();
        let pa = select_truncation_with_epsilon(sa, data.len(), 0.05).unwrap();
        let pb = select_truncation_with_epsilon(sb, doubled.len(), 0.05).unwrap();
        assert_eq!(pa.n_eps, pb.n_eps);
        let ta = pseudo_inverse_apply(sa, &pa, &a.target).unwrap();
        let tb = pseudo_inverse_apply(sb, &pb, &b.target).unwrap();
        assert!(ta.max_abs_diff(&tb).unwrap() < 1e-8);
    }

    #[test]
    fn closed_form_loss_matches_direct_loss() {
        let (env, data) = kumaraswamy_data(20, 5);
        let grids = env.grids();
        let asm = assemble(&data, env.basis(), grids).unwrap();
        let theta = GridFunction::from_fn(grids.omega.clone(), |w| 0.5 + w[0]).unwrap();
        let direct = loss(&theta, &data, env.basis(), grids).unwrap();
        assert!((asm.loss(&theta).unwrap() - direct).abs() < 1e-10);
        let emp = empirical_target(&data, env.basis(), grids).unwrap();
        assert!(emp.max_abs_diff(&asm.target).unwrap() < 1e-12);
    }

    #[test]
    fn loss_examples() {
        let grids = Grids::uniform(1, 4, 100).unwrap();
        let basis = FnBasis::new("s", consts(), |_, _, _, s| s);
        let zero = GridFunction::zeros(grids.omega.clone());
        assert_eq!(loss(&zero, &[], &basis, &grids).unwrap(), 0.0);
        assert!((loss(&zero, &[rec(0.0)], &basis, &grids).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn least_squares_is_stationary_along_retained_modes() {
        let (env, data) = kumaraswamy_data(32, 8);
        let grids = env.grids();
        let config = RegressionConfig {
            gamma: 1.0,
            m_bound: 2.0,
            epsilon_override: None,
        };
        let f = fit(&data, env.basis(), grids, &config).unwrap();
        let spec = f.assembly.operator.spectrum().unwrap();
        let base = loss(&f.unprojected, &data, env.basis(), grids).unwrap();
        for e in &spec.eigenfunctions()[..f.plan.n_eps] {
            for eta in [-1e-2, -1e-3, 1e-3, 1e-2] {
                let p = f.unprojected.add_scaled(eta, e).unwrap();
                assert!(base <= loss(&p, &data, env.basis(), grids).unwrap() + 1e-9);
            }
        }
    }

    #[test]
    fn regress_returns_feasible_density_and_norm_transfer_holds() {
        let (env, data) = kumaraswamy_data(64, 2);
        let grids = env.grids();
        let config = RegressionConfig {
            gamma: 1.0,
            m_bound: 2.0,
            epsilon_override: None,
        };
        let f = fit(&data, env.basis(), grids, &config).unwrap();
        let t = &f.estimate.theta_hat;
        assert!(t.values().iter().all(|v| *v >= -1e-9));
        assert!((t.integral() - 1.0).abs() < 1e-6);
        assert!(t.l2_norm() <= 2.0 + 1e-6);
        let diff = t.sub(env.theta_star()).unwrap();
        let lhs = weighted_norm_sq(&diff, &f.assembly.operator).unwrap();
        let rhs: f64 = data
            .iter()
            .map(|r| {
                let a = predict_cdf(&f.estimate, env.basis(), &r.context, r.action, grids).unwrap();
                let b = env.true_cdf(&r.context, r.action).unwrap();
                let d = a.sub(&b).unwrap();
                d.l2_norm() * d.l2_norm()
            })
            .sum();
        assert!((lhs - rhs).abs() < 1e-6, "{lhs} vs {rhs}");
    }

    #[test]
    fn predicted_cdf_examples() {
        let grids = Grids::uniform(1, 8, 64).unwrap();
        let s_basis = FnBasis::new("s", consts(), |_, _, _, s| s);
        let est = CoefficientEstimate {
            theta_hat: GridFunction::constant(grids.omega.clone(), 1.0),
            norm_bound_m: 2.0,
            diagnostics: crate::projection::ProjectionDiagnostics {
                loss: None,
                n_eps: None,
                iterations: 0,
                converged: true,
            },
        };
        let f = predict_cdf(&est, &s_basis, &[0.2], 0, &grids).unwrap();
        let s: Arc<_> = grids.s.clone();
        for (k, v) in f.values().iter().enumerate().take(s.len() - 1) {
            assert!((v - s.points_1d()[k]).abs() < 1e-12);
        }
        let one = FnBasis::new("one", consts(), |_, _, _, _| 1.0);
        let f = predict_cdf(&est, &one, &[0.2], 0, &grids).unwrap();
        assert!(f.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }
}
