//! AGD: gradient-difference diagonal preconditioner with a per-coordinate
//! switch between adaptive and momentum-SGD updates.
//!
//! At step `t` with first-moment decay `b1` and second-moment decay `b2`:
//!
//! ```text
//! m_t = b1 m_{t-1} + (1 - b1) g_t
//! s_t = m_t / (1 - b1^t) - m_{t-1} / (1 - b1^{t-1})      (s_1 = m_1 / (1 - b1))
//! b_t = b2 b_{t-1} + (1 - b2) s_t^2                       (optionally max(b_t, b_{t-1}))
//! w_{t+1} = w_t - lr_t * sqrt(1 - b2^t) / (1 - b1^t) * m_t / max(sqrt(b_t), delta sqrt(1 - b2^t))
//! ```
//!
//! When a first-moment schedule is active, `b1^t` is replaced by the product
//! of the scheduled rates, which is the exact weight mass of the EMA.

use serde::{Deserialize, Serialize};

use super::{bias1_term, ScratchStep};
use crate::error::{Error, Result};
use crate::numeric::pow_step;
use crate::schedule::schedule_beta1;
use crate::types::HyperParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgdState {
    /// EMA of gradients.
    pub m: Vec<f64>,
    /// EMA of squared gradient differences.
    pub b: Vec<f64>,
    /// Bias-corrected first moment from the previous step.
    pub prev_corrected: Vec<f64>,
    pub t: u64,
    pub amsgrad: bool,
    /// Running product of the first-moment decay rates.
    pub beta1_prod: f64,
}

impl AgdState {
    pub fn new(n: usize, amsgrad: bool) -> Self {
        Self {
            m: vec![0.0; n],
            b: vec![0.0; n],
            prev_corrected: vec![0.0; n],
            t: 0,
            amsgrad,
            beta1_prod: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// `sqrt(b_t / (1 - beta2^t))` for the current step; zeros before the first step.
    pub fn bhat(&self, beta2: f64) -> Vec<f64> {
        if self.t == 0 {
            return vec![0.0; self.b.len()];
        }
        let bias2 = 1.0 - pow_step(beta2, self.t);
        self.b.iter().map(|b| (b / bias2).sqrt()).collect()
    }
}

/// Gradient difference of adjacent bias-corrected first moments, with a
/// constant decay rate `beta1`.
///
/// At `t = 1` the previous term is ignored and `m_1 / (1 - beta1)` is returned.
pub fn agd_compute_s(m_t: &[f64], prev_corrected: &[f64], t: u64, beta1: f64) -> Result<Vec<f64>> {
    if t == 0 {
        return Err(Error::InvalidStep(0));
    }
    if t > 1 && prev_corrected.len() != m_t.len() {
        return Err(Error::Shape {
            what: "previous corrected moment",
            expected: m_t.len(),
            got: prev_corrected.len(),
        });
    }
    let bias1 = 1.0 - pow_step(beta1, t);
    if !(bias1 > 0.0) || beta1 >= 1.0 {
        return Err(Error::Domain(format!(
            "bias correction 1 - beta1^t vanishes for beta1 = {beta1}"
        )));
    }
    Ok(m_t
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let corrected = m / bias1;
            if t == 1 {
                corrected
            } else {
                corrected - prev_corrected[i]
            }
        })
        .collect())
}

pub(super) fn step(
    state: &mut AgdState,
    lr: f64,
    t: u64,
    hp: &HyperParams,
    g: &[f64],
    out: &mut ScratchStep,
) -> Result<()> {
    let beta1_t = schedule_beta1(hp, t);
    let prod = state.beta1_prod * beta1_t;
    let bias1 = bias1_term(hp, t, prod);
    if !(bias1 > 0.0) {
        return Err(Error::Domain("first-moment bias correction vanished".into()));
    }
    let beta2 = hp.beta2;
    let bias2 = 1.0 - pow_step(beta2, t);
    let sqrt_bias2 = bias2.sqrt();
    let floor = hp.delta * sqrt_bias2;
    let sgd_scale = lr / hp.delta;
    // weight of the new gradient in the bias-corrected mean; exactly 1 at t = 1
    let gain = if t == 1 { 1.0 } else { (1.0 - beta1_t) / bias1 };

    for i in 0..g.len() {
        let m = beta1_t * state.m[i] + (1.0 - beta1_t) * g[i];
        // the corrected moment is updated directly so that a constant
        // gradient is an exact fixed point from the first step on
        let prev = state.prev_corrected[i];
        let corrected = prev + gain * (g[i] - prev);
        let s = if t == 1 {
            corrected
        } else {
            corrected - state.prev_corrected[i]
        };
        let mut b = beta2 * state.b[i] + (1.0 - beta2) * s * s;
        if state.amsgrad {
            b = b.max(state.b[i]);
        }
        if !b.is_finite() {
            return Err(Error::NonFinite {
                what: "second moment",
                index: i,
            });
        }
        let root = b.sqrt();
        let bhat = (b / bias2).sqrt();
        // ties count as adaptive
        let truncated = root < floor;
        let (delta_w, eff) = if truncated {
            (-sgd_scale * corrected, lr / hp.delta)
        } else {
            (-lr * (corrected / bhat), lr / bhat)
        };
        out.update[i] = delta_w;
        out.bhat[i] = bhat;
        out.effective_lr[i] = eff;
        out.truncated += truncated as usize;

        state.m[i] = m;
        state.b[i] = b;
        state.prev_corrected[i] = corrected;
    }
    state.beta1_prod = prod;
    state.t = t;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::{optimizer_step, OptimizerKind, OptimizerState};
    use crate::types::{GradVector, ParamVector};

    #[test]
    fn s_first_step_is_gradient() {
        let s = agd_compute_s(&[0.1], &[], 1, 0.9).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn s_second_step_hand_value() {
        // g1 = 1, g2 = 0, beta1 = 0.9: m1 = 0.1, m2 = 0.09
        let m1 = 0.1f64;
        let m2 = 0.9 * m1;
        let prev = m1 / (1.0 - 0.9);
        let s = agd_compute_s(&[m2], &[prev], 2, 0.9).unwrap();
        assert!((s[0] - (-0.526_315_789_473_684_2)).abs() < 1e-12, "{}", s[0]);
    }

    #[test]
    fn s_rejects_unit_beta() {
        assert!(agd_compute_s(&[0.1], &[], 1, 1.0).is_err());
        assert!(agd_compute_s(&[0.1], &[], 0, 0.9).is_err());
    }

    #[test]
    fn constant_gradient_has_vanishing_difference() {
        let hp = HyperParams::default().with_delta(1e-2);
        let mut st = OptimizerState::new(OptimizerKind::Agd, 1);
        let mut w = ParamVector::new(vec![0.0]).unwrap();
        let g = GradVector::new(vec![0.7]).unwrap();
        for t in 1..=200 {
            let prev = match &st {
                OptimizerState::Agd(a) => a.prev_corrected[0],
                _ => unreachable!(),
            };
            let (next, w2, _) = optimizer_step(&st, &w, &g, t, &hp).unwrap();
            if let OptimizerState::Agd(a) = &next {
                if t > 1 {
                    let s = a.prev_corrected[0] - prev;
                    assert!(s.abs() < 1e-15, "t={t} s={s}");
                }
            }
            st = next;
            w = w2;
        }
    }

    #[test]
    fn first_step_hand_value() {
        let hp = HyperParams::default();
        let st = OptimizerState::new(OptimizerKind::Agd, 1);
        let w = ParamVector::new(vec![0.0]).unwrap();
        let g = GradVector::new(vec![1.0]).unwrap();
        let (_, w2, d) = optimizer_step(&st, &w, &g, 1, &hp).unwrap();
        assert!((w2[0] + 1e-3).abs() <= 4.0 * crate::numeric::ulp(1e-3));
        assert_eq!(d.truncation_fraction, 0.0);
    }

    #[test]
    fn bhat_before_first_step_is_zero() {
        let st = AgdState::new(3, false);
        assert_eq!(st.bhat(0.999), vec![0.0; 3]);
    }
}
