//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use cdfbandit_core::decay::estimate_eigendecay;
use cdfbandit_core::engine::resolve_decay;
use cdfbandit_core::operator::point_spectrum;
use cdfbandit_core::regression::{fit, RegressionConfig};
use cdfbandit_core::{degenerate_kernel_eig, GridFunction};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::io::{read_dataset, read_json, read_trace, write_dataset, write_sweep, RunSummary};
use crate::runner::{run_seeds, write_outputs};
use crate::slope::{checkpoint_slope, dyadic};
use crate::sweep::{regression_sweep, SweepOptions};

#[derive(Debug, Parser)]
#[command(
    name = "cdfbandit",
    version,
    about = "Contextual CDF regression and IGW bandit simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Experiment config (TOML); defaults apply when omitted.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set environment.actions=3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::load(self.config.as_deref(), &self.overrides)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KernelName {
    /// `min(s, t)`
    Min,
    /// `s · t`
    Product,
    /// `1`
    Constant,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print leading eigenvalues of an analytic kernel or a catalog point operator.
    Eig {
        #[arg(long, value_enum)]
        kernel: Option<KernelName>,
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        r: usize,
        #[arg(long, default_value_t = 5)]
        count: usize,
        /// Context for the catalog operator (comma separated).
        #[arg(long, value_delimiter = ',')]
        context: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        action: usize,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Estimate the eigendecay exponent of the configured basis.
    Decay {
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 64)]
        k_max: usize,
        #[arg(long, default_value_t = 10.0)]
        s0_budget: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Draw an i.i.d. dataset from the configured environment.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run the regression oracle once on a dataset file.
    Regress {
        #[arg(long)]
        data: PathBuf,
        /// Fixed eigendecay exponent; estimated from the basis when omitted.
        #[arg(long)]
        gamma: Option<f64>,
        /// Write `w…, theta` rows here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run the decision engine for every configured seed.
    Run {
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Held-out regression error against sample size.
    Sweep {
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Log-log slope of cumulative regret over dyadic checkpoints.
    FitSlope {
        /// Trace CSVs or run summary JSONs.
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Eig {
            kernel,
            n,
            r,
            count,
            context,
            action,
            config,
        } => eig(kernel, n, r, count, &context, action, &config),
        Command::Decay {
            samples,
            k_max,
            s0_budget,
            seed,
            config,
        } => {
            let c = config.load()?;
            let env = c.build_env()?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pairs: Vec<(Vec<f64>, usize)> = (0..samples.max(1))
                .map(|_| {
                    (
                        env.sample_context(&mut rng),
                        rng.random_range(0..env.action_count()),
                    )
                })
                .collect();
            let fit = estimate_eigendecay(env.basis(), &pairs, k_max, env.grids(), s0_budget)?;
            print_json(&json!({
                "basis": env.basis().name(),
                "gamma": fit.gamma,
                "s0": fit.s0,
                "c": fit.c,
                "tau": fit.tau,
            }))
        }
        Command::Sample {
            n,
            seed,
            out,
            config,
        } => {
            let env = config.load()?.build_env()?;
            let data = env.sample_dataset(n, &mut ChaCha8Rng::seed_from_u64(seed))?;
            write_dataset(&out, &data)
        }
        Command::Regress {
            data,
            gamma,
            out,
            config,
        } => regress(&data, gamma, out.as_deref(), &config),
        Command::Run { out, config } => {
            let c = config.load()?;
            let runs = run_seeds(&c, true)?;
            let dir = out.unwrap_or_else(|| c.output_dir.clone());
            write_outputs(&dir, &c, &runs)?;
            let rows: Vec<_> = runs
                .iter()
                .map(|r| {
                    json!({
                        "seed": r.trace.seed,
                        "final_regret": r.trace.final_regret,
                        "oracle_calls": r.trace.oracle_calls,
                        "slope": r.slope(),
                        "gamma": r.trace.gamma,
                        "wall_time_secs": r.wall_time_secs,
                    })
                })
                .collect();
            print_json(&json!({ "output_dir": dir, "runs": rows }))
        }
        Command::Sweep { out, config } => {
            let c = config.load()?;
            let env = c.build_env()?;
            let gamma = match c.sweep.gamma {
                Some(g) => g,
                None => resolve_decay(&env, &c.decay_source(), c.seeds[0])?.0,
            };
            let options = SweepOptions {
                sizes: c.sweep.sizes.clone(),
                seeds: c.seeds.clone(),
                holdout: c.sweep.holdout,
                regression: RegressionConfig {
                    gamma,
                    m_bound: c.environment.m_bound,
                    epsilon_override: c.epsilon_override,
                },
            };
            let points = regression_sweep(&env, &options)?;
            let rows: Vec<_> = points.iter().map(|p| p.row()).collect();
            let path = out.unwrap_or_else(|| c.output_dir.join("sweep.csv"));
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
            }
            write_sweep(&path, &rows)?;
            print_json(&json!({ "gamma": gamma, "output": path, "rows": rows }))
        }
        Command::FitSlope { files } => {
            let mut slopes = Vec::new();
            for f in &files {
                let s = slope_of_file(f)?;
                emit(&format!("{}\t{s:.6}", f.display()))?;
                slopes.push(s);
            }
            if slopes.len() > 1 {
                emit(&format!(
                    "mean\t{:.6}",
                    slopes.iter().sum::<f64>() / slopes.len() as f64
                ))?;
            }
            Ok(())
        }
    }
}

fn eig(
    kernel: Option<KernelName>,
    n: usize,
    r: usize,
    count: usize,
    context: &[f64],
    action: usize,
    config: &ConfigArgs,
) -> Result<()> {
    let values: Vec<f64> = match kernel {
        Some(k) => {
            let f: fn(f64, f64) -> f64 = match k {
                KernelName::Min => f64::min,
                KernelName::Product => |s, t| s * t,
                KernelName::Constant => |_, _| 1.0,
            };
            degenerate_kernel_eig(f, n, r)?.eigenvalues().to_vec()
        }
        None => {
            let c = config.load()?;
            let env = c.build_env()?;
            let x = if context.is_empty() {
                vec![0.5; env.context_dim()]
            } else {
                context.to_vec()
            };
            point_spectrum(env.basis(), &x, action, env.grids())?
                .eigenvalues()
                .to_vec()
        }
    };
    for (k, v) in values.iter().take(count).enumerate() {
        emit(&format!("{}\t{v:.10e}", k + 1))?;
    }
    Ok(())
}

fn regress(
    data_path: &Path,
    gamma: Option<f64>,
    out: Option<&Path>,
    config: &ConfigArgs,
) -> Result<()> {
    let c = config.load()?;
    let env = c.build_env()?;
    let data = read_dataset(data_path)?;
    let gamma = match gamma {
        Some(g) => g,
        None => resolve_decay(&env, &c.decay_source(), c.seeds[0])?.0,
    };
    let fitted = fit(
        &data,
        env.basis(),
        env.grids(),
        &RegressionConfig {
            gamma,
            m_bound: c.environment.m_bound,
            epsilon_override: c.epsilon_override,
        },
    )?;
    let d = fitted.estimate.diagnostics;
    if let Some(path) = out {
        write_theta(path, &fitted.estimate.theta_hat)?;
    }
    print_json(&json!({
        "n": data.len(),
        "gamma": gamma,
        "epsilon": fitted.plan.epsilon,
        "threshold": fitted.plan.threshold,
        "n_eps": d.n_eps,
        "loss": d.loss,
        "projection_iterations": d.iterations,
        "projection_converged": d.converged,
        "theta_l2_norm": fitted.estimate.theta_hat.l2_norm(),
    }))
}

fn write_theta(path: &Path, theta: &GridFunction) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::format(path, e))?;
    let dim = theta.grid().dim();
    let mut header: Vec<String> = (0..dim).map(|i| format!("w{i}")).collect();
    header.push("theta".into());
    w.write_record(&header)
        .map_err(|e| HarnessError::format(path, e))?;
    for (i, v) in theta.values().iter().enumerate() {
        let mut row: Vec<String> = theta.grid().node(i).iter().map(|c| c.to_string()).collect();
        row.push(v.to_string());
        w.write_record(&row)
            .map_err(|e| HarnessError::format(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Slope from a trace CSV (dyadic rows) or a run summary JSON (checkpoints).
pub fn slope_of_file(path: &Path) -> Result<f64> {
    if path.extension().is_some_and(|e| e == "json") {
        let summary: RunSummary = read_json(path)?;
        return checkpoint_slope(&summary.checkpoints);
    }
    let rows = read_trace(path)?;
    checkpoint_slope(&dyadic(rows.iter().map(|r| (r.round, r.cum_regret))))
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    emit(&serde_json::to_string_pretty(value).unwrap_or_default())
}

/// Writes one line to stdout. A closed reader (`| head`) ends output quietly.
fn emit(line: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{line}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(HarnessError::io("<stdout>", e))
        }
        _ => Ok(()),
    }
}
