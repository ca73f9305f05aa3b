//! Executing a single experiment and writing its artifacts.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::diagnostics::{record_run, RecordOptions, RunStatus, TestFnProblem, Trajectory};
use crate::error::Result;
use crate::models::{gen_two_moons, MlpProblem, MlpSpec};
use crate::numeric::{derive_seed, l2_distance};
use crate::optim::OptimizerKind;
use crate::theory::{online_regret, RegretExperiment, RegretProblem};
use crate::types::HyperParams;

use super::config::{DatasetConfig, ExperimentConfig, ProblemConfig};
use super::io::{write_atomic, write_json_atomic};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const HISTOGRAM_FILE: &str = "histograms.json";
pub const CONFIG_FILE: &str = "config.toml";

// Stream keys for seeds derived from the configured one.
const KEY_DATA: u64 = 1;
const KEY_MODEL: u64 = 2;
const KEY_REGRET: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SummaryStatus {
    /// Reached the tolerance around a known optimum and ended inside it.
    Converged,
    Completed,
    Diverged,
}

impl SummaryStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SummaryStatus::Converged => "converged",
            SummaryStatus::Completed => "completed",
            SummaryStatus::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub status: SummaryStatus,
    pub problem: String,
    pub optimizer: OptimizerKind,
    pub hyper_params: HyperParams,
    pub seed: u64,
    pub steps: u64,
    pub final_loss: Option<f64>,
    pub steps_to_tol: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diverged_at: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence_reason: Option<String>,
    pub final_params: Vec<f64>,
    /// Full-dataset loss and accuracy at the final parameters (MLP runs).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_accuracy: Option<f64>,
    /// Regret at the horizon and its log-log slope over the final decade.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regret: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regret_slope: Option<f64>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub summary: RunSummary,
}

/// Runs the experiment in memory.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let started = Instant::now();
    let kind = cfg.optimizer.name;
    let hp = cfg.hyper_params();
    let opts = |steps: u64| RecordOptions::new(steps).snapshot_every(cfg.snapshot_cadence()).seed(cfg.seed);
    let mut summary_extra = (None, None, None, None);
    let mut ended_within_tol = false;
    let trajectory = match &cfg.problem {
        ProblemConfig::Testfn {
            name,
            start,
            steps,
            tol,
        } => {
            let mut p = TestFnProblem::new(*name);
            if let Some(s) = start {
                p = p.with_start(*s);
            }
            let traj = record_run(&mut p, kind, &hp, opts(*steps).tol(*tol))?;
            ended_within_tol = l2_distance(&traj.final_params, &name.optimum()) <= *tol;
            traj
        }
        ProblemConfig::Mlp {
            dataset,
            hidden,
            activation,
            loss,
            batch_size,
            epochs,
        } => {
            let DatasetConfig::TwoMoons { n, noise } = dataset;
            let data = Arc::new(gen_two_moons(*n, *noise, derive_seed(cfg.seed, KEY_DATA))?);
            let spec = MlpSpec {
                in_dim: data.in_dim,
                hidden_dim: *hidden,
                out_dim: if *loss == crate::models::Loss::Logistic { 1 } else { 2 },
                activation: *activation,
                loss: *loss,
            };
            let mut p = MlpProblem::new(spec, data, *batch_size, derive_seed(cfg.seed, KEY_MODEL))?;
            let steps = epochs * p.steps_per_epoch() as u64;
            let traj = record_run(&mut p, kind, &hp, opts(steps))?;
            if !traj.diverged() {
                let (l, a) = p.evaluate(&traj.final_params)?;
                summary_extra.0 = Some(l);
                summary_extra.1 = Some(a);
            }
            traj
        }
        ProblemConfig::Regret {
            dim,
            horizon,
            center_radius,
        } => {
            let exp = Arc::new(RegretExperiment::random(
                *dim,
                *horizon,
                *center_radius,
                derive_seed(cfg.seed, KEY_REGRET),
            )?);
            let mut p = RegretProblem::new(exp.clone())?;
            let traj = record_run(&mut p, kind, &hp, opts(*horizon as u64))?;
            if !traj.diverged() {
                let r = online_regret(&exp, kind, &hp)?;
                summary_extra.2 = Some(r.final_regret);
                summary_extra.3 = Some(r.slope);
            }
            traj
        }
    };
    let (diverged_at, divergence_reason) = match &trajectory.status {
        RunStatus::Diverged { step, reason } => (Some(*step), Some(reason.clone())),
        RunStatus::Completed => (None, None),
    };
    let status = if diverged_at.is_some() {
        SummaryStatus::Diverged
    } else if trajectory.steps_to_tol.is_some() && ended_within_tol {
        SummaryStatus::Converged
    } else {
        SummaryStatus::Completed
    };
    let summary = RunSummary {
        status,
        problem: trajectory.meta.problem.clone(),
        optimizer: kind,
        hyper_params: hp,
        seed: cfg.seed,
        steps: trajectory.points.len() as u64,
        final_loss: trajectory.final_loss(),
        steps_to_tol: trajectory.steps_to_tol,
        diverged_at,
        divergence_reason,
        final_params: trajectory.final_params.clone(),
        eval_loss: summary_extra.0,
        eval_accuracy: summary_extra.1,
        regret: summary_extra.2,
        regret_slope: summary_extra.3,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    log::info!(
        "{} on {}: {} after {} steps",
        kind,
        summary.problem,
        status.as_str(),
        summary.steps
    );
    Ok(RunOutput { trajectory, summary })
}

/// Runs the experiment and writes `trajectory.csv`, `summary.json`,
/// `histograms.json` and the resolved `config.toml` into `out`.
pub fn run_to_dir(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutput> {
    let result = execute(cfg)?;
    write_atomic(&out.join(CONFIG_FILE), cfg.to_toml_string()?.as_bytes())?;
    write_atomic(&out.join(TRAJECTORY_FILE), result.trajectory.to_csv().as_bytes())?;
    write_json_atomic(&out.join(HISTOGRAM_FILE), &result.trajectory.snapshots_json())?;
    write_json_atomic(&out.join(SUMMARY_FILE), &result.summary)?;
    Ok(result)
}
