//! CSV and JSON formats for datasets, traces, run summaries and sweeps.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use cdfbandit_core::{RegretTrace, SampleRecord};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| HarnessError::format(path, e))
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::Reader::from_path(path).map_err(|e| HarnessError::format(path, e))
}

/// Columns: `round, x0, …, x{d−1}, action, y`.
pub fn write_dataset(path: &Path, data: &[SampleRecord]) -> Result<()> {
    let dim = data.first().map_or(0, |r| r.context.len());
    let mut w = writer(path)?;
    let mut header = vec!["round".to_string()];
    header.extend((0..dim).map(|i| format!("x{i}")));
    header.extend(["action".to_string(), "y".to_string()]);
    w.write_record(&header)
        .map_err(|e| HarnessError::format(path, e))?;
    for r in data {
        if r.context.len() != dim {
            return Err(HarnessError::format(path, "contexts have mixed dimensions"));
        }
        let mut row = vec![r.round.to_string()];
        row.extend(r.context.iter().map(|v| v.to_string()));
        row.extend([r.action.to_string(), r.outcome.to_string()]);
        w.write_record(&row)
            .map_err(|e| HarnessError::format(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<Vec<SampleRecord>> {
    let mut r = reader(path)?;
    let header = r
        .headers()
        .map_err(|e| HarnessError::format(path, e))?
        .clone();
    let n = header.len();
    if n < 3 || &header[0] != "round" || &header[n - 2] != "action" || &header[n - 1] != "y" {
        return Err(HarnessError::format(
            path,
            "expected columns round, x0.., action, y",
        ));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| HarnessError::format(path, e))?;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| HarnessError::format(path, format!("column {i}: {e}")))
        };
        let int = |i: usize| -> Result<usize> {
            rec[i]
                .trim()
                .parse::<usize>()
                .map_err(|e| HarnessError::format(path, format!("column {i}: {e}")))
        };
        out.push(SampleRecord {
            round: int(0)?,
            context: (1..n - 2).map(num).collect::<Result<_>>()?,
            action: int(n - 2)?,
            outcome: num(n - 1)?,
        });
    }
    Ok(out)
}

/// One row of a trace CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub round: usize,
    pub epoch: usize,
    pub action: usize,
    pub optimal_action: usize,
    pub gap: f64,
    pub cum_regret: f64,
}

pub fn write_trace(path: &Path, trace: &RegretTrace) -> Result<()> {
    let mut w = writer(path)?;
    for r in &trace.rounds {
        w.serialize(TraceRow {
            round: r.round,
            epoch: r.epoch,
            action: r.action,
            optimal_action: r.optimal_action,
            gap: r.gap,
            cum_regret: r.cum_regret,
        })
        .map_err(|e| HarnessError::format(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    reader(path)?
        .deserialize()
        .map(|r| r.map_err(|e| HarnessError::format(path, e)))
        .collect()
}

/// Per-run summary written next to each trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub horizon: usize,
    pub final_regret: f64,
    pub checkpoints: Vec<(usize, f64)>,
    pub oracle_calls: usize,
    pub projection_warnings: usize,
    pub gamma: f64,
    pub s0: f64,
    pub decay_source: String,
    pub exploration_scale: f64,
    pub slope: Option<f64>,
    pub wall_time_secs: f64,
}

/// Row of a sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub seeds: usize,
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = writer(path)?;
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::format(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_sweep(path: &Path) -> Result<Vec<SweepRow>> {
    reader(path)?
        .deserialize()
        .map(|r| r.map_err(|e| HarnessError::format(path, e)))
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value)
        .map_err(|e| HarnessError::format(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| HarnessError::format(path, e))
}
