//! Numeric forms of the effective-step-size and preconditioner-norm lemmas.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{derive_seed, pow_step};
use crate::optim::{Optimizer, OptimizerKind, OptimizerState};
use crate::par::{self, Exec};
use crate::schedule::{schedule_beta1, Beta1Schedule, LrSchedule};
use crate::types::HyperParams;

/// Effective step sizes `alpha_t sqrt(1 - beta2^t) / (1 - beta1_t^t)` with
/// `alpha_t = alpha / sqrt(t)`, for `t = 1..=horizon`.
pub fn alpha_hat_series(alpha: f64, beta1: f64, schedule: Beta1Schedule, beta2: f64, horizon: u64) -> Vec<f64> {
    let hp = HyperParams {
        beta1,
        beta1_schedule: schedule,
        ..HyperParams::default()
    };
    (1..=horizon)
        .map(|t| {
            let alpha_t = alpha / (t as f64).sqrt();
            let b1t = schedule_beta1(&hp, t);
            alpha_t * (1.0 - pow_step(beta2, t)).sqrt() / (1.0 - pow_step(b1t, t))
        })
        .collect()
}

/// Indices `t` (1-based) where `series[t] >= series[t-1]`.
pub fn strict_decrease_violations(series: &[f64]) -> Vec<usize> {
    series
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] >= w[0])
        .map(|(k, _)| k + 2)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma3Check {
    /// `max_t sum_i v_{t,i} / (n (2G + delta) / (1 - beta1)^2)` with
    /// `v_t = max(sqrt(b_t), delta sqrt(1 - beta2^t))`.
    pub max_ratio: f64,
    pub bound: f64,
    pub steps: usize,
}

/// `n (2G + delta) / (1 - beta1)^2`
pub fn lemma3_bound(n: usize, g_inf: f64, hp: &HyperParams) -> f64 {
    n as f64 * (2.0 * g_inf + hp.delta) / ((1.0 - hp.beta1) * (1.0 - hp.beta1))
}

/// `sum_i max(sqrt(b_{t,i}), delta sqrt(1 - beta2^t))` for an AGD state.
pub fn preconditioner_mass(state: &OptimizerState, hp: &HyperParams) -> f64 {
    match state {
        OptimizerState::Agd(s) if s.t > 0 => {
            let floor = hp.delta * (1.0 - pow_step(hp.beta2, s.t)).sqrt();
            s.b.iter().map(|b| b.sqrt().max(floor)).sum()
        }
        _ => 0.0,
    }
}

/// Runs AGD over a gradient stream bounded by `g_inf` in the max norm and
/// reports the largest ratio of the preconditioner mass to its bound.
pub fn lemma3_bound_check(stream: &[Vec<f64>], g_inf: f64, hp: &HyperParams, amsgrad: bool) -> Result<Lemma3Check> {
    let n = stream.first().map(Vec::len).ok_or_else(|| Error::Domain("empty gradient stream".into()))?;
    if g_inf < hp.delta {
        return Err(Error::Domain("gradient bound must be at least delta".into()));
    }
    let kind = if amsgrad {
        OptimizerKind::AgdAmsgrad
    } else {
        OptimizerKind::Agd
    };
    let mut opt = Optimizer::new(kind, hp.clone(), n)?;
    let mut w = vec![0.0; n];
    let bound = lemma3_bound(n, g_inf, hp);
    let mut max_ratio: f64 = 0.0;
    for (t, g) in stream.iter().enumerate() {
        if let Some(i) = g.iter().position(|x| x.abs() > g_inf) {
            return Err(Error::Domain(format!(
                "gradient at step {} coordinate {i} exceeds the bound {g_inf}",
                t + 1
            )));
        }
        opt.step(&mut w, g)?;
        max_ratio = max_ratio.max(preconditioner_mass(opt.state(), hp) / bound);
    }
    Ok(Lemma3Check {
        max_ratio,
        bound,
        steps: stream.len(),
    })
}

/// How the randomized bounded streams are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    /// Uniform in `[-G, G]`.
    Uniform,
    /// `+-G` with random signs; makes the gradient differences as large as possible.
    SignFlip,
}

/// A reproducible bounded gradient stream.
pub fn bounded_stream(n: usize, steps: usize, g_inf: f64, kind: StreamKind, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..steps)
        .map(|_| {
            (0..n)
                .map(|_| match kind {
                    StreamKind::Uniform => rng.random_range(-g_inf..=g_inf),
                    StreamKind::SignFlip => {
                        if rng.random::<bool>() {
                            g_inf
                        } else {
                            -g_inf
                        }
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma3Sweep {
    pub runs: usize,
    pub max_ratio: f64,
    pub violations: usize,
}

/// `runs` independent randomized streams (alternating uniform and sign-flip).
pub fn lemma3_random_runs(
    runs: usize,
    n: usize,
    g_inf: f64,
    steps: usize,
    hp: &HyperParams,
    seed: u64,
    exec: Exec,
) -> Result<Lemma3Sweep> {
    let checks = par::map_indexed(exec, runs, |r| {
        let kind = if r % 2 == 0 {
            StreamKind::Uniform
        } else {
            StreamKind::SignFlip
        };
        let stream = bounded_stream(n, steps, g_inf, kind, derive_seed(seed, r as u64));
        lemma3_bound_check(&stream, g_inf, hp, false)
    });
    let mut out = Lemma3Sweep {
        runs,
        max_ratio: 0.0,
        violations: 0,
    };
    for c in checks {
        let c = c?;
        out.max_ratio = out.max_ratio.max(c.max_ratio);
        out.violations += (c.max_ratio >= 1.0) as usize;
    }
    Ok(out)
}

/// Steps (out of `steps`) where AGD with the AMSGrad condition let some
/// coordinate of `b_t` decrease, on a Gaussian gradient stream.
pub fn amsgrad_monotonicity_violations(n: usize, steps: usize, hp: &HyperParams, seed: u64) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::StandardNormal;
    let mut opt = Optimizer::new(OptimizerKind::AgdAmsgrad, hp.clone(), n)?;
    let mut w = vec![0.0; n];
    let mut prev = vec![0.0; n];
    let mut violations = 0;
    for _ in 0..steps {
        let scale = 10f64.powf(rng.random_range(-3.0..2.0));
        let g: Vec<f64> = (0..n)
            .map(|_| scale * rand_distr::Distribution::<f64>::sample(&normal, &mut rng))
            .collect();
        opt.step(&mut w, &g)?;
        if let OptimizerState::Agd(s) = opt.state() {
            if s.b.iter().zip(&prev).any(|(b, p)| b < p) {
                violations += 1;
            }
            prev.clone_from(&s.b);
        }
    }
    Ok(violations)
}

/// Hyperparameters for theory-mode runs: `alpha / sqrt(t)` and `beta1 / t`.
pub fn theory_mode(hp: &HyperParams) -> HyperParams {
    hp.clone()
        .with_lr_schedule(LrSchedule::InverseSqrt)
        .with_beta1_schedule(Beta1Schedule::OverT)
}
