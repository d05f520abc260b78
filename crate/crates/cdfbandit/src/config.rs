//! Experiment configuration: a TOML file plus `key.path=value` overrides.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use cdfbandit_core::env::{Bump, CatalogKind};
use cdfbandit_core::{
    make_catalog_env, CatalogSpec, DecaySource, Environment, EpisodeConfig, Grids, ThetaSpec,
    UtilityFunctional,
};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvironmentConfig,
    pub functional: FunctionalConfig,
    pub grids: GridConfig,
    pub horizon: usize,
    pub delta: f64,
    pub decay: DecayConfig,
    pub exploration_scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_override: Option<f64>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub sweep: SweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            environment: EnvironmentConfig::default(),
            functional: FunctionalConfig::Mean,
            grids: GridConfig::default(),
            horizon: 1024,
            delta: 0.1,
            decay: DecayConfig::default(),
            exploration_scale: 1.0,
            epsilon_override: None,
            seeds: vec![0],
            output_dir: PathBuf::from("out"),
            sweep: SweepConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentConfig {
    /// `rank1-uniform`, `kumaraswamy` or `finite-rank`.
    pub catalog: String,
    pub actions: usize,
    pub context_dim: usize,
    pub omega_dim: usize,
    pub rank: usize,
    pub alpha_amp: f64,
    pub beta_amp: f64,
    pub m_bound: f64,
    pub theta: ThetaConfig,
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        Self {
            catalog: "kumaraswamy".into(),
            actions: 5,
            context_dim: 1,
            omega_dim: 1,
            rank: 8,
            alpha_amp: 3.0,
            beta_amp: 3.0,
            m_bound: 2.0,
            theta: ThetaConfig::Uniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ThetaConfig {
    Uniform,
    Bumps { bumps: Vec<BumpConfig> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub center: f64,
    pub width: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionalConfig {
    Mean,
    Variance,
    SmoothedQuantile {
        q: f64,
        #[serde(default = "default_bandwidth")]
        h: f64,
    },
    /// One loss per S node.
    ExpectedPenalty {
        loss_row: Vec<f64>,
    },
}

fn default_bandwidth() -> f64 {
    cdfbandit_core::functional::DEFAULT_BANDWIDTH
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub omega_nodes: usize,
    pub s_nodes: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            omega_nodes: 32,
            s_nodes: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DecayConfig {
    Fixed {
        gamma: f64,
        s0: f64,
    },
    Estimate {
        samples: usize,
        k_max: usize,
        s0_budget: f64,
    },
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self::Estimate {
            samples: 32,
            k_max: 64,
            s0_budget: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub sizes: Vec<usize>,
    pub holdout: usize,
    /// Eigendecay exponent for the truncation rule; estimated when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sizes: vec![64, 256, 1024, 4096],
            holdout: 200,
            gamma: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Reads `path` (or starts from defaults) and applies `key.path=value` overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| HarnessError::io(p, e))?;
                text.parse::<toml::Table>()
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let config: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        let e = &self.environment;
        if e.actions == 0 || e.context_dim == 0 || e.omega_dim == 0 {
            return bad("actions, context_dim and omega_dim must be positive");
        }
        if !(e.m_bound >= 1.0) {
            return bad("environment.m_bound must be at least 1");
        }
        if self.grids.omega_nodes < 2 || self.grids.s_nodes < 2 {
            return bad("grids need at least 2 nodes per axis");
        }
        if self.horizon < 2 {
            return bad("horizon must be at least 2");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        if !(self.exploration_scale > 0.0 && self.exploration_scale.is_finite()) {
            return bad("exploration_scale must be positive");
        }
        if let Some(eps) = self.epsilon_override {
            if !(eps > 0.0) {
                return bad("epsilon_override must be positive");
            }
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        match &self.decay {
            DecayConfig::Fixed { gamma, s0 } if !(*gamma > 0.0 && *gamma <= 1.0 && *s0 > 0.0) => {
                return bad("fixed decay needs 0 < gamma <= 1 and s0 > 0");
            }
            DecayConfig::Estimate { k_max, samples, .. } if *k_max < 4 || *samples == 0 => {
                return bad("estimated decay needs k_max >= 4 and samples >= 1");
            }
            _ => {}
        }
        if let FunctionalConfig::SmoothedQuantile { q, h } = self.functional {
            if !(q > 0.0 && q < 1.0 && h > 0.0) {
                return bad("smoothed quantile needs 0 < q < 1 and h > 0");
            }
        }
        if self.sweep.sizes.contains(&0) || self.sweep.holdout == 0 {
            return bad("sweep sizes and holdout must be positive");
        }
        Ok(())
    }

    pub fn build_grids(&self) -> Result<Grids> {
        Ok(Grids::uniform(
            self.environment.omega_dim,
            self.grids.omega_nodes,
            self.grids.s_nodes,
        )?)
    }

    pub fn catalog_spec(&self) -> Result<CatalogSpec> {
        let e = &self.environment;
        let kind = CatalogKind::from_name(&e.catalog, e.rank, e.alpha_amp, e.beta_amp)?;
        let theta = match &e.theta {
            ThetaConfig::Uniform => ThetaSpec::Uniform,
            ThetaConfig::Bumps { bumps } => ThetaSpec::Bumps(
                bumps
                    .iter()
                    .map(|b| Bump {
                        center: b.center,
                        width: b.width,
                        weight: b.weight,
                    })
                    .collect(),
            ),
        };
        Ok(CatalogSpec {
            kind,
            action_count: e.actions,
            context_dim: e.context_dim,
            m_bound: e.m_bound,
            theta,
        })
    }

    pub fn build_env(&self) -> Result<Environment> {
        Ok(make_catalog_env(
            &self.catalog_spec()?,
            self.build_grids()?,
        )?)
    }

    pub fn build_functional(&self, env: &Environment) -> Result<UtilityFunctional> {
        Ok(match &self.functional {
            FunctionalConfig::Mean => UtilityFunctional::Mean,
            FunctionalConfig::Variance => UtilityFunctional::Variance,
            FunctionalConfig::SmoothedQuantile { q, h } => {
                UtilityFunctional::smoothed_quantile(*q, *h)?
            }
            FunctionalConfig::ExpectedPenalty { loss_row } => {
                let s: &Arc<_> = &env.grids().s;
                UtilityFunctional::expected_penalty(loss_row.clone(), s)?
            }
        })
    }

    pub fn decay_source(&self) -> DecaySource {
        match self.decay {
            DecayConfig::Fixed { gamma, s0 } => DecaySource::Fixed { gamma, s0 },
            DecayConfig::Estimate {
                samples,
                k_max,
                s0_budget,
            } => DecaySource::Estimate {
                samples,
                k_max,
                s0_budget,
            },
        }
    }

    pub fn episode_config(&self, seed: u64) -> EpisodeConfig {
        EpisodeConfig {
            horizon: self.horizon,
            delta: self.delta,
            decay: self.decay_source(),
            m_bound: Some(self.environment.m_bound),
            exploration_scale: self.exploration_scale,
            epsilon_override: self.epsilon_override,
            seed,
            record_rounds: true,
        }
    }
}

/// Sets `a.b.c = value` in `table`, parsing `value` as a TOML literal and
/// falling back to a plain string.
pub fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| HarnessError::Config(format!("override `{item}` is not key=value")))?;
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, parents) = parts
        .split_last()
        .filter(|(l, _)| !l.is_empty())
        .ok_or_else(|| HarnessError::Config(format!("empty key in `{item}`")))?;
    let mut cursor = table;
    for p in parents {
        let entry = cursor
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| HarnessError::Config(format!("`{p}` is not a table")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        let text = c.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let c = ExperimentConfig::load(
            None,
            &[
                "environment.catalog=finite-rank".into(),
                "environment.rank=4".into(),
                "horizon=256".into(),
                "seeds=[1, 2, 3]".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.environment.catalog, "finite-rank");
        assert_eq!(c.environment.rank, 4);
        assert_eq!(c.horizon, 256);
        assert_eq!(c.seeds, vec![1, 2, 3]);
    }

    #[test]
    fn tagged_sections_parse() {
        let c = ExperimentConfig::from_toml_str(
            r#"
            horizon = 64
            [functional]
            kind = "smoothed-quantile"
            q = 0.25
            [decay]
            source = "fixed"
            gamma = 1.0
            s0 = 3.0
            [environment.theta]
            kind = "bumps"
            bumps = [{ center = 0.3, width = 0.2, weight = 1.0 }]
            "#,
        )
        .unwrap();
        assert_eq!(
            c.functional,
            FunctionalConfig::SmoothedQuantile { q: 0.25, h: 0.05 }
        );
        assert_eq!(
            c.decay,
            DecayConfig::Fixed {
                gamma: 1.0,
                s0: 3.0
            }
        );
        assert!(c.build_env().is_ok());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ExperimentConfig::from_toml_str("delta = 1.5").is_err());
        assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
        assert!(ExperimentConfig::load(None, &["horizon".into()]).is_err());
    }
}
