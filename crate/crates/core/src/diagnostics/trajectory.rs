use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::fmt_f64;
use super::problem::Problem;
use crate::error::{Error, Result};
use crate::numeric::l2_distance;
use crate::optim::{Histogram, Optimizer, OptimizerKind};
use crate::types::HyperParams;

/// Losses above this are treated as divergence.
pub const DIVERGENCE_LOSS: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub optimizer: OptimizerKind,
    pub hyper_params: HyperParams,
    pub seed: u64,
    pub problem: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// Stopped at `step` because the loss or an update stopped being finite
    /// (or the loss exceeded [`DIVERGENCE_LOSS`]).
    Diverged { step: u64, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    /// Parameters at which the point's loss was evaluated.
    pub params: Vec<f64>,
    pub histogram: Histogram,
    pub effective_lr_minmax: (f64, f64),
}

/// One optimizer step: the loss at `w_t` and statistics of the update from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajPoint {
    pub t: u64,
    pub loss: f64,
    pub step_norm: f64,
    pub truncation_fraction: f64,
    pub snapshot: Option<Snapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub meta: RunMeta,
    pub points: Vec<TrajPoint>,
    pub status: RunStatus,
    /// Parameters after the last completed step.
    pub final_params: Vec<f64>,
    /// First step count after which the iterate was within `tol` of the optimum.
    pub steps_to_tol: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordOptions {
    pub steps: u64,
    pub snapshot_every: u64,
    pub seed: u64,
    /// Distance-to-optimum tolerance, for problems with a known optimum.
    pub tol: Option<f64>,
}

impl RecordOptions {
    pub fn new(steps: u64) -> Self {
        Self {
            steps,
            snapshot_every: 1,
            seed: 0,
            tol: None,
        }
    }

    pub fn snapshot_every(mut self, every: u64) -> Self {
        self.snapshot_every = every;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = Some(tol);
        self
    }
}

/// Runs `kind` on `problem`, recording every step.
///
/// Snapshots (parameters and the full preconditioner histogram) are kept at
/// `t = 1` and every `snapshot_every` steps. Divergence truncates the run and
/// is reported through [`RunStatus`], not as an error.
pub fn record_run(
    problem: &mut dyn Problem,
    kind: OptimizerKind,
    hp: &HyperParams,
    opts: RecordOptions,
) -> Result<Trajectory> {
    if opts.steps == 0 {
        return Err(Error::config("steps", "must be >= 1"));
    }
    if opts.snapshot_every == 0 {
        return Err(Error::config("snapshot_every", "must be >= 1"));
    }
    let n = problem.dim();
    let mut opt = Optimizer::new(kind, hp.clone(), n)?;
    let mut w = problem.initial_point();
    let optimum = problem.optimum();
    let mut grad = vec![0.0; n];
    let mut points = Vec::with_capacity(opts.steps.min(1 << 20) as usize);
    let mut status = RunStatus::Completed;

    let within_tol = |w: &[f64]| match (&optimum, opts.tol) {
        (Some(o), Some(tol)) => l2_distance(w, o) <= tol,
        _ => false,
    };
    let mut steps_to_tol = within_tol(&w).then_some(0);

    for t in 1..=opts.steps {
        let loss = match problem.loss_grad(&w, &mut grad) {
            Ok(l) => l,
            Err(e @ Error::NonFinite { .. }) => {
                status = RunStatus::Diverged {
                    step: t,
                    reason: e.to_string(),
                };
                break;
            }
            Err(e) => return Err(e),
        };
        if !loss.is_finite() || loss > DIVERGENCE_LOSS {
            status = RunStatus::Diverged {
                step: t,
                reason: format!("loss {loss} exceeded divergence threshold"),
            };
            break;
        }
        let snapshot_params = (t == 1 || t % opts.snapshot_every == 0).then(|| w.clone());
        let diag = match opt.step(&mut w, &grad) {
            Ok(d) => d,
            Err(e @ (Error::NonFinite { .. } | Error::Domain(_))) => {
                status = RunStatus::Diverged {
                    step: t,
                    reason: e.to_string(),
                };
                break;
            }
            Err(e) => return Err(e),
        };
        problem.project(&mut w);
        points.push(TrajPoint {
            t,
            loss,
            step_norm: diag.step_norm,
            truncation_fraction: diag.truncation_fraction,
            snapshot: snapshot_params.map(|params| Snapshot {
                params,
                histogram: diag.bhat_histogram,
                effective_lr_minmax: diag.effective_lr_minmax,
            }),
        });
        if steps_to_tol.is_none() && within_tol(&w) {
            steps_to_tol = Some(t);
        }
    }

    Ok(Trajectory {
        meta: RunMeta {
            optimizer: kind,
            hyper_params: hp.clone(),
            seed: opts.seed,
            problem: problem.name(),
        },
        points,
        status,
        final_params: w,
        steps_to_tol,
    })
}

impl Trajectory {
    pub fn diverged(&self) -> bool {
        matches!(self.status, RunStatus::Diverged { .. })
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.points.last().map(|p| p.loss)
    }

    /// Parameter snapshots in step order.
    pub fn snapshot_params(&self) -> Vec<&[f64]> {
        self.points
            .iter()
            .filter_map(|p| p.snapshot.as_ref().map(|s| s.params.as_slice()))
            .collect()
    }

    pub const CSV_HEADER: &'static str = "t,loss,step_norm,truncation_fraction";

    /// Trajectory CSV: `t,loss,step_norm,truncation_fraction`, one row per step.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.points.len() + 1));
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                p.t,
                fmt_f64(p.loss),
                fmt_f64(p.step_norm),
                fmt_f64(p.truncation_fraction)
            );
        }
        out
    }

    /// Histogram sidecar: one object per snapshot.
    pub fn snapshots_json(&self) -> serde_json::Value {
        let snaps: Vec<_> = switch_timeline(self)
            .into_iter()
            .map(|s| {
                serde_json::json!({
                    "t": s.t,
                    "truncation_fraction": s.truncation_fraction,
                    "underflow": s.histogram.underflow,
                    "counts": s.histogram.counts,
                    "overflow": s.histogram.overflow,
                    "bin_low_exp": crate::optim::HIST_LOW.log10().round() as i32,
                })
            })
            .collect();
        serde_json::Value::Array(snaps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwitchPoint {
    pub t: u64,
    pub truncation_fraction: f64,
    pub histogram: Histogram,
}

/// Per-snapshot switch statistics of a run.
pub fn switch_timeline(traj: &Trajectory) -> Vec<SwitchPoint> {
    let out: Vec<SwitchPoint> = traj
        .points
        .iter()
        .filter_map(|p| {
            p.snapshot.as_ref().map(|s| SwitchPoint {
                t: p.t,
                truncation_fraction: p.truncation_fraction,
                histogram: s.histogram.clone(),
            })
        })
        .collect();
    if out.is_empty() {
        log::warn!("trajectory for {} has no diagnostic snapshots", traj.meta.problem);
    }
    out
}
