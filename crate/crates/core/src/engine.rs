//! Epoch-batched inverse-gap-weighting decision engine and regret accounting.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::PhiTable;
use crate::budget::{error_budget, BudgetInputs, ErrorBudget};
use crate::decay::{estimate_eigendecay, DEFAULT_S0_BUDGET};
use crate::env::{argmax, invert_grid_cdf, Environment};
use crate::error::{Error, Result};
use crate::functional::UtilityFunctional;
use crate::grid::GridFunction;
use crate::math::sqrt;
use crate::regression::{fit, RegressionConfig};

/// Doubling schedule `ξ_m = 2^m`, truncated at the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpochSchedule {
    horizon: usize,
}

impl EpochSchedule {
    pub fn new(horizon: usize) -> Result<Self> {
        if horizon < 2 {
            return Err(Error::invalid("horizon must be at least 2"));
        }
        Ok(Self { horizon })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `ξ_m`, with `ξ_0 = 0`.
    pub fn boundary(&self, m: usize) -> usize {
        if m == 0 {
            0
        } else if m >= usize::BITS as usize - 1 {
            self.horizon
        } else {
            (1usize << m).min(self.horizon)
        }
    }

    /// Number of epochs needed to cover the horizon.
    pub fn epoch_count(&self) -> usize {
        let mut m = 1;
        while self.boundary(m) < self.horizon {
            m += 1;
        }
        m
    }

    /// Boundaries `ξ_0, …, ξ_{epoch_count}`.
    pub fn boundaries(&self) -> Vec<usize> {
        (0..=self.epoch_count()).map(|m| self.boundary(m)).collect()
    }

    /// Rounds `(ξ_{m−1}, ξ_m]`, one-based.
    pub fn rounds(&self, m: usize) -> core::ops::RangeInclusive<usize> {
        self.boundary(m - 1) + 1..=self.boundary(m)
    }

    /// Epoch containing one-based round `t`.
    pub fn epoch_of(&self, t: usize) -> usize {
        let mut m = 1;
        while self.boundary(m) < t {
            m += 1;
        }
        m
    }
}

/// Inverse gap weighting around the greedy action.
///
/// Non-greedy actions get `1 / (K + ς·gap)`; the greedy action takes the
/// remaining mass. Equal utilities give exactly `1/K` everywhere.
pub fn igw_distribution(utilities: &[f64], varsigma: f64) -> Result<Vec<f64>> {
    let k = utilities.len();
    if k == 0 {
        return Err(Error::Empty);
    }
    if utilities.iter().any(|u| !u.is_finite()) {
        return Err(Error::NonFinite);
    }
    if !(varsigma >= 0.0 && varsigma.is_finite()) {
        return Err(Error::invalid(
            "exploration parameter must be finite and nonnegative",
        ));
    }
    let (best, top) = argmax(utilities);
    let kf = k as f64;
    if utilities.iter().all(|u| *u == top) {
        return Ok(alloc::vec![1.0 / kf; k]);
    }
    let mut p: Vec<f64> = utilities
        .iter()
        .map(|u| 1.0 / (kf + varsigma * (top - u)))
        .collect();
    let others: f64 = p
        .iter()
        .enumerate()
        .filter(|(a, _)| *a != best)
        .map(|(_, v)| v)
        .sum();
    p[best] = 1.0 - others;
    Ok(p)
}

/// `ς_m = c · ½ · √(K n / Est)` with `n = budget.inputs.n`.
pub fn exploration_param(
    m: usize,
    delta: f64,
    action_count: usize,
    budget: &ErrorBudget,
    scale: f64,
) -> Result<f64> {
    if m < 2 {
        return Err(Error::invalid(
            "exploration parameter is defined for epochs m ≥ 2",
        ));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta must lie in (0, 1)"));
    }
    if !(scale > 0.0 && scale.is_finite()) || action_count == 0 {
        return Err(Error::invalid("scale and action count must be positive"));
    }
    Ok(scale * 0.5 * sqrt(action_count as f64 * budget.inputs.n / budget.est))
}

/// Where the eigendecay parameters `(γ, s0)` come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DecaySource {
    Fixed {
        gamma: f64,
        s0: f64,
    },
    /// Pre-pass over `samples` random pairs of the environment.
    Estimate {
        samples: usize,
        k_max: usize,
        s0_budget: f64,
    },
}

impl Default for DecaySource {
    fn default() -> Self {
        Self::Estimate {
            samples: 32,
            k_max: 64,
            s0_budget: DEFAULT_S0_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeConfig {
    pub horizon: usize,
    pub delta: f64,
    pub decay: DecaySource,
    /// Defaults to the basis' declared bound.
    pub m_bound: Option<f64>,
    pub exploration_scale: f64,
    pub epsilon_override: Option<f64>,
    pub seed: u64,
    /// Keep per-round records (checkpoints are always kept).
    pub record_rounds: bool,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            horizon: 1024,
            delta: 0.1,
            decay: DecaySource::default(),
            m_bound: None,
            exploration_scale: 1.0,
            epsilon_override: None,
            seed: 0,
            record_rounds: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub epoch: usize,
    pub context: Vec<f64>,
    pub action: usize,
    pub optimal_action: usize,
    pub gap: f64,
    pub cum_regret: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub first_round: usize,
    pub last_round: usize,
    pub varsigma: f64,
    /// `Est` used for `ς`; absent in epoch 1.
    pub est: Option<f64>,
    pub n_eps: Option<usize>,
    pub projection_iterations: Option<usize>,
    pub projection_converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub horizon: usize,
    pub seed: u64,
    pub functional: String,
    pub gamma: f64,
    pub s0: f64,
    pub decay_source: String,
    pub exploration_scale: f64,
    pub rounds: Vec<RoundRecord>,
    pub epochs: Vec<EpochRecord>,
    /// Cumulative regret at rounds `2^k ≤ T`.
    pub checkpoints: Vec<(usize, f64)>,
    pub final_regret: f64,
    pub oracle_calls: usize,
    pub projection_warnings: usize,
}

impl RegretTrace {
    /// `⌈log₂ T⌉ + 1`.
    pub fn oracle_call_limit(horizon: usize) -> usize {
        let mut bits = 0;
        while (1usize << bits) < horizon {
            bits += 1;
        }
        bits + 1
    }
}

/// Resolves `(γ, s0)` and a label for the trace.
pub fn resolve_decay(
    env: &Environment,
    source: &DecaySource,
    seed: u64,
) -> Result<(f64, f64, String)> {
    match source {
        DecaySource::Fixed { gamma, s0 } => {
            if !(*gamma > 0.0 && *gamma <= 1.0 && *s0 > 0.0) {
                return Err(Error::invalid("fixed decay needs 0 < γ ≤ 1 and s0 > 0"));
            }
            Ok((*gamma, *s0, String::from("fixed")))
        }
        DecaySource::Estimate {
            samples,
            k_max,
            s0_budget,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD1B5_4A32_D192_ED03);
            let pairs: Vec<(Vec<f64>, usize)> = (0..(*samples).max(1))
                .map(|_| {
                    let x = env.sample_context(&mut rng);
                    (x, rng.random_range(0..env.action_count()))
                })
                .collect();
            let fit = estimate_eigendecay(env.basis(), &pairs, *k_max, env.grids(), *s0_budget)?;
            Ok((
                fit.gamma,
                fit.s0.max(f64::MIN_POSITIVE),
                String::from("estimated"),
            ))
        }
    }
}

/// Runs the engine for `config.horizon` rounds against `env`.
pub fn run_episode(
    env: &Environment,
    functional: &UtilityFunctional,
    config: &EpisodeConfig,
) -> Result<RegretTrace> {
    let schedule = EpochSchedule::new(config.horizon)?;
    if !(config.delta > 0.0 && config.delta < 1.0) {
        return Err(Error::invalid("delta must lie in (0, 1)"));
    }
    let constants = *env.basis().constants();
    let m_bound = config.m_bound.unwrap_or(constants.coeff_norm_bound_m);
    let (gamma, s0, decay_source) = resolve_decay(env, &config.decay, config.seed)?;
    let grids = env.grids();
    let k = env.action_count();
    let regression = RegressionConfig {
        gamma,
        m_bound,
        epsilon_override: config.epsilon_override,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trace = RegretTrace {
        horizon: config.horizon,
        seed: config.seed,
        functional: String::from(functional.name()),
        gamma,
        s0,
        decay_source,
        exploration_scale: config.exploration_scale,
        rounds: Vec::new(),
        epochs: Vec::new(),
        checkpoints: Vec::new(),
        final_regret: 0.0,
        oracle_calls: 0,
        projection_warnings: 0,
    };
    let mut cum = 0.0;
    let mut next_checkpoint = 1;
    let mut previous: Vec<crate::env::SampleRecord> = Vec::new();

    for m in 1..=schedule.epoch_count() {
        let mut record = EpochRecord {
            epoch: m,
            first_round: *schedule.rounds(m).start(),
            last_round: *schedule.rounds(m).end(),
            varsigma: 1.0,
            est: None,
            n_eps: None,
            projection_iterations: None,
            projection_converged: true,
        };
        let theta: Option<GridFunction> = if m >= 2 {
            let fitted = fit(&previous, env.basis(), grids, &regression)?;
            trace.oracle_calls += 1;
            let diag = fitted.estimate.diagnostics;
            if !diag.converged {
                trace.projection_warnings += 1;
            }
            let delta_m = config.delta / (2.0 * (m * m) as f64);
            let budget = error_budget(BudgetInputs {
                n: previous.len() as f64,
                delta: delta_m / 2.0,
                gamma,
                s0,
                m_bound,
                lipschitz: functional.lipschitz(),
                l0: constants.lipschitz_l0,
                covering_a: constants.covering_constant_a,
                dim: constants.omega_dim as f64,
                eta: constants.kernel_floor_eta,
            })?;
            record.varsigma =
                exploration_param(m, config.delta, k, &budget, config.exploration_scale)?;
            record.est = Some(budget.est);
            record.n_eps = diag.n_eps;
            record.projection_iterations = Some(diag.iterations);
            record.projection_converged = diag.converged;
            Some(fitted.estimate.theta_hat)
        } else {
            None
        };

        let mut current = Vec::with_capacity(schedule.rounds(m).count());
        for t in schedule.rounds(m) {
            let x = env.sample_context(&mut rng);
            let mut estimated = alloc::vec![0.0; k];
            let mut truth = alloc::vec![0.0; k];
            let mut true_cdfs = Vec::with_capacity(k);
            for a in 0..k {
                let table = PhiTable::new(env.basis(), &x, a, grids)?;
                let true_cdf = env.cdf_from_table(&table);
                truth[a] = functional.evaluate(&true_cdf)?;
                if let Some(theta) = &theta {
                    let values = table.mix(theta.values(), grids.omega.weights());
                    let cdf = GridFunction::from_parts_unchecked(grids.s.clone(), values);
                    estimated[a] = functional.evaluate(&cdf)?;
                }
                true_cdfs.push(true_cdf);
            }
            let p = igw_distribution(&estimated, record.varsigma)?;
            let action = draw(&p, rng.random::<f64>());
            let outcome = invert_grid_cdf(&true_cdfs[action], rng.random::<f64>());
            let (optimal_action, best) = argmax(&truth);
            let gap = best - truth[action];
            cum += gap;
            if config.record_rounds {
                trace.rounds.push(RoundRecord {
                    round: t,
                    epoch: m,
                    context: x.clone(),
                    action,
                    optimal_action,
                    gap,
                    cum_regret: cum,
                });
            }
            if t == next_checkpoint {
                trace.checkpoints.push((t, cum));
                next_checkpoint *= 2;
            }
            current.push(crate::env::SampleRecord {
                round: t,
                context: x,
                action,
                outcome,
            });
        }
        trace.epochs.push(record);
        previous = current;
    }
    trace.final_regret = cum;
    assert!(
        trace.oracle_calls <= RegretTrace::oracle_call_limit(config.horizon),
        "oracle budget exceeded"
    );
    Ok(trace)
}

/// Inverse-CDF draw from a probability vector.
fn draw(p: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (a, v) in p.iter().enumerate() {
        acc += v;
        if u < acc {
            return a;
        }
    }
    p.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_catalog_env, CatalogKind, CatalogSpec, Grids};
    use alloc::vec;

    #[test]
    fn schedule_doubles() {
        let s = EpochSchedule::new(10).unwrap();
        assert_eq!(s.boundaries(), vec![0, 2, 4, 8, 10]);
        assert_eq!(s.epoch_of(1), 1);
        assert_eq!(s.epoch_of(3), 2);
        assert_eq!(s.epoch_of(9), 4);
        assert_eq!(s.rounds(3), 5..=8);
        assert_eq!(EpochSchedule::new(8192).unwrap().epoch_count(), 13);
        assert!(EpochSchedule::new(1).is_err());
    }

    #[test]
    fn igw_examples() {
        let p = igw_distribution(&[1.0, 0.5], 1.0).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.4).abs() < 1e-15);
        assert_eq!(igw_distribution(&[0.3; 4], 7.0).unwrap(), vec![0.25; 4]);
        let p = igw_distribution(&[0.9, 0.1, 0.5], 1e-12).unwrap();
        assert!(p.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-9));
        assert!(igw_distribution(&[f64::NAN, 0.0], 1.0).is_err());
    }

    #[test]
    fn exploration_param_examples() {
        let mut budget = error_budget(BudgetInputs {
            n: 1.0,
            delta: 0.5,
            gamma: 1.0,
            s0: 1.0,
            m_bound: 1.0,
            lipschitz: 1.0,
            l0: 1.0,
            covering_a: 1.0,
            dim: 1.0,
            eta: 1.0,
        })
        .unwrap();
        budget.est = 5.0 / 4.0;
        let s = exploration_param(2, 0.1, 5, &budget, 1.0).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
        assert_eq!(exploration_param(2, 0.1, 5, &budget, 2.0).unwrap(), 2.0 * s);
        assert!(exploration_param(1, 0.1, 5, &budget, 1.0).is_err());
    }

    fn grids() -> Grids {
        Grids::uniform(1, 16, 32).unwrap()
    }

    #[test]
    fn single_action_has_no_regret() {
        let env = make_catalog_env(
            &CatalogSpec::new(
                CatalogKind::Kumaraswamy {
                    alpha_amp: 2.0,
                    beta_amp: 2.0,
                },
                1,
                1,
            ),
            grids(),
        )
        .unwrap();
        let config = EpisodeConfig {
            horizon: 64,
            ..EpisodeConfig::default()
        };
        let trace = run_episode(&env, &UtilityFunctional::Mean, &config).unwrap();
        assert_eq!(trace.final_regret, 0.0);
    }

    #[test]
    fn identical_actions_have_no_regret_and_runs_are_deterministic() {
        let env =
            make_catalog_env(&CatalogSpec::new(CatalogKind::Rank1Uniform, 3, 2), grids()).unwrap();
        let config = EpisodeConfig {
            horizon: 100,
            seed: 3,
            ..EpisodeConfig::default()
        };
        let a = run_episode(&env, &UtilityFunctional::Mean, &config).unwrap();
        assert!(a.final_regret.abs() < 1e-9);
        assert_eq!(a.oracle_calls, 6);
        assert_eq!(
            a.checkpoints.iter().map(|c| c.0).collect::<Vec<_>>(),
            vec![1, 2, 4, 8, 16, 32, 64]
        );
        let b = run_episode(&env, &UtilityFunctional::Mean, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oracle_limit() {
        assert_eq!(RegretTrace::oracle_call_limit(8192), 14);
        assert_eq!(RegretTrace::oracle_call_limit(100), 8);
    }
}
