//! One run per value of a single hyperparameter.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::diagnostics::fmt_f64;
use crate::error::Result;
use crate::par::{self, Exec};

use super::config::ExperimentConfig;
use super::io::write_atomic;
use super::run::{execute, run_to_dir, RunSummary, SummaryStatus};

pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_HEADER: &str = "index,value,seed,status,final_loss,steps_to_tol,eval_accuracy,diverged_at";

/// Seed of sweep point `index`: the base seed plus the index, so appending
/// values never changes earlier points and a one-value sweep equals a run.
pub fn point_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add(index as u64)
}

pub fn point_dir(index: usize) -> String {
    format!("point_{index:03}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub value: String,
    pub seed: u64,
    pub summary: RunSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub param: String,
    pub rows: Vec<SweepRow>,
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn opt_u64(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{SWEEP_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.index,
                r.value,
                r.seed,
                r.summary.status.as_str(),
                opt_f64(r.summary.final_loss),
                opt_u64(r.summary.steps_to_tol),
                opt_f64(r.summary.eval_accuracy),
                opt_u64(r.summary.diverged_at),
            );
        }
        s
    }

    pub fn diverged(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.summary.status == SummaryStatus::Diverged)
    }
}

fn value_label(v: &toml::Value) -> String {
    match v {
        toml::Value::Float(f) => fmt_f64(*f),
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Parses one command-line value as a TOML scalar (`1e-4`, `20`, `true`);
/// anything else is taken as a bare string.
pub fn parse_value(text: &str) -> toml::Value {
    let text = text.trim();
    toml::from_str::<toml::Table>(&format!("v = {text}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(text.to_string()))
}

/// Splits a comma-separated list of values.
pub fn parse_values(list: &str) -> Vec<toml::Value> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(parse_value).collect()
}

/// Builds every point's config up front so a bad value fails before any run.
pub fn sweep_configs(base: &ExperimentConfig, param: &str, values: &[toml::Value]) -> Result<Vec<ExperimentConfig>> {
    if values.is_empty() {
        return Err(crate::error::Error::config("values", "need at least one value"));
    }
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut c = base.with_param(param, v.clone())?;
            c.seed = point_seed(base.seed, i);
            Ok(c)
        })
        .collect()
}

/// Runs every point, writing each into `out/point_NNN/` and the table into
/// `out/sweep.csv` when `out` is given. Points run concurrently under `exec`.
pub fn sweep(
    base: &ExperimentConfig,
    param: &str,
    values: &[toml::Value],
    out: Option<&Path>,
    exec: Exec,
) -> Result<SweepResult> {
    let configs = sweep_configs(base, param, values)?;
    let summaries = par::map_indexed(exec, configs.len(), |idx| {
        let c = &configs[idx];
        match out {
            Some(dir) => run_to_dir(c, &dir.join(point_dir(idx))),
            None => execute(c),
        }
        .map(|r| r.summary)
    });
    let rows = summaries
        .into_iter()
        .zip(values)
        .enumerate()
        .map(|(index, (summary, v))| {
            Ok(SweepRow {
                index,
                value: value_label(v),
                seed: point_seed(base.seed, index),
                summary: summary?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let result = SweepResult {
        param: param.to_string(),
        rows,
    };
    if let Some(dir) = out {
        write_atomic(&dir.join(SWEEP_FILE), result.to_csv().as_bytes())?;
    }
    Ok(result)
}
