//! Adam, AdamW and AdaBelief.
//!
//! AdamW shares the Adam kernel; decoupled weight decay is applied by the
//! dispatcher before any optimizer-specific update.

use serde::{Deserialize, Serialize};

use super::{bias1_term, ScratchStep};
use crate::error::{Error, Result};
use crate::numeric::pow_step;
use crate::schedule::schedule_beta1;
use crate::types::HyperParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdamVariant {
    Adam,
    AdamW,
    AdaBelief,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamLikeState {
    pub m: Vec<f64>,
    /// EMA of `g^2` (Adam, AdamW) or of `(g - m)^2` (AdaBelief).
    pub v: Vec<f64>,
    pub t: u64,
    pub variant: AdamVariant,
    pub beta1_prod: f64,
}

impl AdamLikeState {
    pub fn new(n: usize, variant: AdamVariant) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            variant,
            beta1_prod: 1.0,
        }
    }
}

pub(super) fn step(
    state: &mut AdamLikeState,
    lr: f64,
    t: u64,
    hp: &HyperParams,
    g: &[f64],
    out: &mut ScratchStep,
) -> Result<()> {
    let beta1_t = schedule_beta1(hp, t);
    let prod = state.beta1_prod * beta1_t;
    let bias1 = bias1_term(hp, t, prod);
    let beta2 = hp.beta2;
    let bias2 = 1.0 - pow_step(beta2, t);
    let eps = hp.delta;
    let belief = state.variant == AdamVariant::AdaBelief;
    let inner_eps = if belief && hp.belief_eps_inside { eps } else { 0.0 };

    for i in 0..g.len() {
        let m = beta1_t * state.m[i] + (1.0 - beta1_t) * g[i];
        let innovation = if belief { g[i] - m } else { g[i] };
        let v = beta2 * state.v[i] + (1.0 - beta2) * innovation * innovation + inner_eps;
        if !v.is_finite() {
            return Err(Error::NonFinite {
                what: "second moment",
                index: i,
            });
        }
        let m_hat = m / bias1;
        let v_hat_root = (v / bias2).sqrt();
        let eff = lr / (v_hat_root + eps);
        out.update[i] = -eff * m_hat;
        out.bhat[i] = v_hat_root;
        out.effective_lr[i] = eff;
        state.m[i] = m;
        state.v[i] = v;
    }
    state.beta1_prod = prod;
    state.t = t;
    Ok(())
}
