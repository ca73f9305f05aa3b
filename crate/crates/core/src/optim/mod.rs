//! Optimizers and the uniform stepping contract.
//!
//! Every optimizer is driven through [`optimizer_step`] (pure) or
//! [`Optimizer::step`] (in place). Both apply decoupled weight decay
//! `w <- w - lr_t * weight_decay * w` before the optimizer-specific update and
//! leave the inputs untouched when an error is returned.

mod adam;
mod agd;
mod sgd;
mod stats;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use adam::{AdamLikeState, AdamVariant};
pub use agd::{agd_compute_s, AgdState};
pub use sgd::SgdState;
pub use stats::{
    truncation_fraction_from_bhat, Histogram, StepDiagnostics, HIST_BINS, HIST_HIGH, HIST_LOW,
};

use crate::error::{Error, Result};
use crate::numeric::{l2_norm, pow_step};
use crate::schedule::{schedule_lr, Beta1Schedule, StepSchedule};
use crate::types::{GradVector, HyperParams, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
    #[serde(rename = "adamw")]
    AdamW,
    #[serde(rename = "adabelief")]
    AdaBelief,
    Agd,
    AgdAmsgrad,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 6] = [
        OptimizerKind::Sgd,
        OptimizerKind::Adam,
        OptimizerKind::AdamW,
        OptimizerKind::AdaBelief,
        OptimizerKind::Agd,
        OptimizerKind::AgdAmsgrad,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
            OptimizerKind::AdamW => "adamw",
            OptimizerKind::AdaBelief => "adabelief",
            OptimizerKind::Agd => "agd",
            OptimizerKind::AgdAmsgrad => "agd_amsgrad",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OptimizerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config("optimizer", format!("unknown optimizer `{s}`")))
    }
}

/// Mutable state of any supported optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OptimizerState {
    Sgd(SgdState),
    AdamLike(AdamLikeState),
    Agd(AgdState),
}

impl OptimizerState {
    /// Fresh state (`t = 0`, zero moments) for an `n`-dimensional problem.
    pub fn new(kind: OptimizerKind, n: usize) -> Self {
        match kind {
            OptimizerKind::Sgd => OptimizerState::Sgd(SgdState::new(n)),
            OptimizerKind::Adam => OptimizerState::AdamLike(AdamLikeState::new(n, AdamVariant::Adam)),
            OptimizerKind::AdamW => {
                OptimizerState::AdamLike(AdamLikeState::new(n, AdamVariant::AdamW))
            }
            OptimizerKind::AdaBelief => {
                OptimizerState::AdamLike(AdamLikeState::new(n, AdamVariant::AdaBelief))
            }
            OptimizerKind::Agd => OptimizerState::Agd(AgdState::new(n, false)),
            OptimizerKind::AgdAmsgrad => OptimizerState::Agd(AgdState::new(n, true)),
        }
    }

    pub fn step_count(&self) -> u64 {
        match self {
            OptimizerState::Sgd(s) => s.t,
            OptimizerState::AdamLike(s) => s.t,
            OptimizerState::Agd(s) => s.t,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            OptimizerState::Sgd(s) => s.buffer.len(),
            OptimizerState::AdamLike(s) => s.m.len(),
            OptimizerState::Agd(s) => s.m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> OptimizerKind {
        match self {
            OptimizerState::Sgd(_) => OptimizerKind::Sgd,
            OptimizerState::AdamLike(s) => match s.variant {
                AdamVariant::Adam => OptimizerKind::Adam,
                AdamVariant::AdamW => OptimizerKind::AdamW,
                AdamVariant::AdaBelief => OptimizerKind::AdaBelief,
            },
            OptimizerState::Agd(s) if s.amsgrad => OptimizerKind::AgdAmsgrad,
            OptimizerState::Agd(_) => OptimizerKind::Agd,
        }
    }
}

/// `1 - prod_{i<=t} beta1_i`; for a constant schedule this is `1 - beta1^t`.
pub(crate) fn bias1_term(hp: &HyperParams, t: u64, prod: f64) -> f64 {
    match hp.beta1_schedule {
        Beta1Schedule::Constant => 1.0 - pow_step(hp.beta1, t),
        _ => 1.0 - prod,
    }
}

/// Per-coordinate outputs written by a kernel.
pub(crate) struct ScratchStep {
    update: Vec<f64>,
    bhat: Vec<f64>,
    effective_lr: Vec<f64>,
    truncated: usize,
}

impl ScratchStep {
    fn new(n: usize) -> Self {
        Self {
            update: vec![0.0; n],
            bhat: vec![0.0; n],
            effective_lr: vec![0.0; n],
            truncated: 0,
        }
    }
}

fn check_inputs(state: &OptimizerState, w: &[f64], g: &[f64], t: u64, hp: &HyperParams) -> Result<()> {
    if t == 0 {
        return Err(Error::InvalidStep(0));
    }
    if g.len() != w.len() {
        return Err(Error::Shape {
            what: "gradient",
            expected: w.len(),
            got: g.len(),
        });
    }
    if state.len() != w.len() {
        return Err(Error::Shape {
            what: "optimizer state",
            expected: w.len(),
            got: state.len(),
        });
    }
    if t != state.step_count() + 1 {
        return Err(Error::Domain(format!(
            "step {t} does not follow state step counter {}",
            state.step_count()
        )));
    }
    if let Some(index) = g.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            what: "gradient",
            index,
        });
    }
    if let Some(index) = w.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            what: "parameters",
            index,
        });
    }
    hp.validate()
}

/// Computes one step into fresh buffers; nothing is committed on error.
fn compute_step(
    state: &OptimizerState,
    w: &[f64],
    g: &[f64],
    t: u64,
    hp: &HyperParams,
) -> Result<(OptimizerState, Vec<f64>, StepDiagnostics)> {
    check_inputs(state, w, g, t, hp)?;
    let lr = schedule_lr(&StepSchedule::from(hp), t)?;
    let n = w.len();
    let mut next_state = state.clone();
    let mut scratch = ScratchStep::new(n);
    match &mut next_state {
        OptimizerState::Sgd(s) => sgd::step(s, lr, t, hp, g, &mut scratch)?,
        OptimizerState::AdamLike(s) => adam::step(s, lr, t, hp, g, &mut scratch)?,
        OptimizerState::Agd(s) => agd::step(s, lr, t, hp, g, &mut scratch)?,
    }

    let decay = lr * hp.weight_decay;
    let mut next = Vec::with_capacity(n);
    let mut applied = Vec::with_capacity(n);
    for i in 0..n {
        let decayed = if decay > 0.0 { w[i] - decay * w[i] } else { w[i] };
        let v = decayed + scratch.update[i];
        if !v.is_finite() {
            return Err(Error::NonFinite {
                what: "updated parameters",
                index: i,
            });
        }
        applied.push(v - w[i]);
        next.push(v);
    }

    let (lo, hi) = scratch
        .effective_lr
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    let diag = StepDiagnostics {
        truncation_fraction: scratch.truncated as f64 / n as f64,
        bhat_histogram: Histogram::from_values(scratch.bhat.iter().copied()),
        step_norm: l2_norm(&applied),
        effective_lr_minmax: (lo, hi),
    };
    Ok((next_state, next, diag))
}

/// One optimizer step as a pure function of its inputs.
///
/// `t` must equal the state's step counter plus one.
pub fn optimizer_step(
    state: &OptimizerState,
    w: &ParamVector,
    g: &GradVector,
    t: u64,
    hp: &HyperParams,
) -> Result<(OptimizerState, ParamVector, StepDiagnostics)> {
    let (st, next, diag) = compute_step(state, w, g, t, hp)?;
    Ok((st, ParamVector::new(next)?, diag))
}

/// An optimizer bundled with its hyperparameters and state, stepping in place.
#[derive(Debug, Clone)]
pub struct Optimizer {
    hp: HyperParams,
    state: OptimizerState,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, hp: HyperParams, n: usize) -> Result<Self> {
        hp.validate()?;
        Ok(Self {
            hp,
            state: OptimizerState::new(kind, n),
        })
    }

    pub fn kind(&self) -> OptimizerKind {
        self.state.kind()
    }

    pub fn hyper_params(&self) -> &HyperParams {
        &self.hp
    }

    pub fn state(&self) -> &OptimizerState {
        &self.state
    }

    /// Steps performed so far.
    pub fn steps(&self) -> u64 {
        self.state.step_count()
    }

    /// Applies the next step to `w`. On error neither `w` nor the state change.
    pub fn step(&mut self, w: &mut [f64], g: &[f64]) -> Result<StepDiagnostics> {
        let t = self.state.step_count() + 1;
        let (st, next, diag) = compute_step(&self.state, w, g, t, &self.hp)?;
        self.state = st;
        w.copy_from_slice(&next);
        Ok(diag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec()).unwrap()
    }
    fn gv(v: &[f64]) -> GradVector {
        GradVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn zero_gradient_fresh_state_never_moves() {
        let hp = HyperParams::default();
        for kind in OptimizerKind::ALL {
            let st = OptimizerState::new(kind, 3);
            let (_, w, d) = optimizer_step(&st, &pv(&[1.0, -2.0, 3.0]), &gv(&[0.0; 3]), 1, &hp).unwrap();
            assert_eq!(w.as_slice(), &[1.0, -2.0, 3.0], "{kind}");
            assert_eq!(d.step_norm, 0.0);
            assert_eq!(d.bhat_histogram.total(), 3);
        }
    }

    #[test]
    fn shape_and_finiteness_errors() {
        let hp = HyperParams::default();
        let st = OptimizerState::new(OptimizerKind::Agd, 2);
        let err = optimizer_step(&st, &pv(&[0.0, 0.0]), &gv(&[1.0]), 1, &hp).unwrap_err();
        assert!(matches!(err, Error::Shape { .. }));
        let mut opt = Optimizer::new(OptimizerKind::Agd, hp.clone(), 2).unwrap();
        let mut w = vec![0.5, 0.5];
        match opt.step(&mut w, &[1.0, f64::INFINITY]) {
            Err(Error::NonFinite { index, what }) => {
                assert_eq!(index, 1);
                assert_eq!(what, "gradient");
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(w, vec![0.5, 0.5]);
        assert_eq!(opt.steps(), 0);
        let st = OptimizerState::new(OptimizerKind::Agd, 1);
        assert!(optimizer_step(&st, &pv(&[0.0]), &gv(&[1.0]), 2, &hp).is_err());
        assert!(matches!(
            optimizer_step(&st, &pv(&[0.0]), &gv(&[1.0]), 0, &hp),
            Err(Error::InvalidStep(0))
        ));
    }

    #[test]
    fn zero_delta_rejected() {
        let hp = HyperParams::default().with_delta(0.0);
        assert!(matches!(
            Optimizer::new(OptimizerKind::Agd, hp, 1),
            Err(Error::Config { ref field, .. }) if field == "delta"
        ));
    }

    #[test]
    fn weight_decay_is_geometric_under_zero_gradient() {
        let hp = HyperParams::default().with_alpha(0.1).with_weight_decay(0.5);
        for kind in OptimizerKind::ALL {
            let mut opt = Optimizer::new(kind, hp.clone(), 1).unwrap();
            let mut w = vec![2.0];
            let mut expected = 2.0;
            for _ in 0..100 {
                opt.step(&mut w, &[0.0]).unwrap();
                expected -= 0.1 * 0.5 * expected;
                assert_eq!(w[0], expected, "{kind}");
            }
            assert!(w[0] < 2.0 * 0.95f64.powi(99));
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in OptimizerKind::ALL {
            assert_eq!(kind.name().parse::<OptimizerKind>().unwrap(), kind);
            assert_eq!(OptimizerState::new(kind, 1).kind(), kind);
        }
        assert!("adamax".parse::<OptimizerKind>().is_err());
    }

    #[test]
    fn pure_and_in_place_agree() {
        let hp = HyperParams::default().with_alpha(0.01);
        let mut opt = Optimizer::new(OptimizerKind::Agd, hp.clone(), 2).unwrap();
        let mut st = OptimizerState::new(OptimizerKind::Agd, 2);
        let mut w_pure = pv(&[1.0, 2.0]);
        let mut w = vec![1.0, 2.0];
        for t in 1..=20u64 {
            let g = [(t as f64).sin(), (t as f64 * 0.3).cos()];
            let d1 = opt.step(&mut w, &g).unwrap();
            let (s, w2, d2) = optimizer_step(&st, &w_pure, &gv(&g), t, &hp).unwrap();
            st = s;
            w_pure = w2;
            assert_eq!(w.as_slice(), w_pure.as_slice());
            assert_eq!(d1, d2);
        }
    }
}
