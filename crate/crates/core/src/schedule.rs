//! Step-size and first-moment decay schedules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::HyperParams;

/// Learning-rate schedule kind.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    #[default]
    Constant,
    /// `base / sqrt(t)`
    InverseSqrt,
    /// Multiply by every `factor` whose `step` has been reached.
    Milestones(Vec<(u64, f64)>),
}

impl LrSchedule {
    pub(crate) fn validate(&self) -> Result<()> {
        if let LrSchedule::Milestones(ms) = self {
            for (step, factor) in ms {
                if !(factor.is_finite() && *factor > 0.0) {
                    return Err(Error::config(
                        "lr_schedule",
                        format!("milestone at step {step} has non-positive factor {factor}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Schedule for the first-moment decay rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Beta1Schedule {
    #[default]
    Constant,
    /// `beta1 / sqrt(t)`
    OverSqrtT,
    /// `beta1 / t`
    OverT,
}

/// A base step size paired with its decay rule.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSchedule {
    pub base: f64,
    pub kind: LrSchedule,
}

impl StepSchedule {
    pub fn new(base: f64, kind: LrSchedule) -> Self {
        Self { base, kind }
    }

    pub fn at(&self, t: u64) -> Result<f64> {
        schedule_lr(self, t)
    }
}

impl From<&HyperParams> for StepSchedule {
    fn from(hp: &HyperParams) -> Self {
        StepSchedule::new(hp.alpha, hp.lr_schedule.clone())
    }
}

/// Step size at step `t` (1-based).
pub fn schedule_lr(sched: &StepSchedule, t: u64) -> Result<f64> {
    if t == 0 {
        return Err(Error::InvalidStep(t));
    }
    Ok(match &sched.kind {
        LrSchedule::Constant => sched.base,
        LrSchedule::InverseSqrt => sched.base / (t as f64).sqrt(),
        LrSchedule::Milestones(ms) => ms
            .iter()
            .filter(|(step, _)| *step <= t)
            .fold(sched.base, |lr, (_, factor)| lr * factor),
    })
}

/// First-moment decay rate at step `t`. `t = 0` is treated as `t = 1`.
pub fn schedule_beta1(hp: &HyperParams, t: u64) -> f64 {
    let t = t.max(1) as f64;
    match hp.beta1_schedule {
        Beta1Schedule::Constant => hp.beta1,
        Beta1Schedule::OverSqrtT => hp.beta1 / t.sqrt(),
        Beta1Schedule::OverT => hp.beta1 / t,
    }
}
