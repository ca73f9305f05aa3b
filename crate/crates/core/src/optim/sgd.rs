use serde::{Deserialize, Serialize};

use super::ScratchStep;
use crate::error::Result;
use crate::types::HyperParams;

/// Heavy-ball momentum buffer. The momentum coefficient is `HyperParams::beta1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdState {
    pub buffer: Vec<f64>,
    pub t: u64,
}

impl SgdState {
    pub fn new(n: usize) -> Self {
        Self {
            buffer: vec![0.0; n],
            t: 0,
        }
    }
}

pub(super) fn step(
    state: &mut SgdState,
    lr: f64,
    t: u64,
    hp: &HyperParams,
    g: &[f64],
    out: &mut ScratchStep,
) -> Result<()> {
    let mu = hp.beta1;
    for i in 0..g.len() {
        let buf = mu * state.buffer[i] + g[i];
        state.buffer[i] = buf;
        out.update[i] = -lr * buf;
        out.bhat[i] = 0.0;
        out.effective_lr[i] = lr;
    }
    out.truncated = g.len();
    state.t = t;
    Ok(())
}
