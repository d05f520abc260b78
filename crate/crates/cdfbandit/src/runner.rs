//! Multi-seed episode runs and their on-disk outputs.

use std::path::Path;
use std::time::Instant;

use cdfbandit_core::{run_episode, RegretTrace};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::io::{write_json, write_trace, RunSummary};
use crate::slope::checkpoint_slope;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: RegretTrace,
    pub wall_time_secs: f64,
}

impl RunOutcome {
    pub fn slope(&self) -> Option<f64> {
        checkpoint_slope(&self.trace.checkpoints).ok()
    }

    pub fn summary(&self, config: &ExperimentConfig) -> RunSummary {
        let t = &self.trace;
        RunSummary {
            config: config.clone(),
            seed: t.seed,
            horizon: t.horizon,
            final_regret: t.final_regret,
            checkpoints: t.checkpoints.clone(),
            oracle_calls: t.oracle_calls,
            projection_warnings: t.projection_warnings,
            gamma: t.gamma,
            s0: t.s0,
            decay_source: t.decay_source.clone(),
            exploration_scale: t.exploration_scale,
            slope: self.slope(),
            wall_time_secs: self.wall_time_secs,
        }
    }
}

/// One episode per configured seed, in parallel.
pub fn run_seeds(config: &ExperimentConfig, record_rounds: bool) -> Result<Vec<RunOutcome>> {
    let env = config.build_env()?;
    let functional = config.build_functional(&env)?;
    config
        .seeds
        .par_iter()
        .map(|seed| {
            let start = Instant::now();
            let mut episode = config.episode_config(*seed);
            episode.record_rounds = record_rounds;
            let trace = run_episode(&env, &functional, &episode)?;
            Ok(RunOutcome {
                trace,
                wall_time_secs: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

/// Writes `trace_seed{S}.csv` and `summary_seed{S}.json` per run.
pub fn write_outputs(dir: &Path, config: &ExperimentConfig, runs: &[RunOutcome]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    for run in runs {
        let seed = run.trace.seed;
        write_trace(&dir.join(format!("trace_seed{seed}.csv")), &run.trace)?;
        write_json(
            &dir.join(format!("summary_seed{seed}.json")),
            &run.summary(config),
        )?;
    }
    Ok(())
}
