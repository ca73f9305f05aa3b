//! The bundled theory suite and its JSON report.

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::optim::OptimizerKind;
use crate::par::Exec;
use crate::schedule::Beta1Schedule;
use crate::types::HyperParams;

use super::lemmas::{alpha_hat_series, amsgrad_monotonicity_violations, lemma3_random_runs, strict_decrease_violations, theory_mode};
use super::regret::{online_regret, RegretExperiment};
use super::variance::variance_ratio_mc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimStatus {
    Pass,
    Fail,
    /// The sample size is too small for the tolerance to be meaningful.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimReport {
    pub claim: String,
    pub parameters: serde_json::Value,
    pub observed: f64,
    pub bound: f64,
    pub pass: bool,
    pub status: ClaimStatus,
}

impl ClaimReport {
    fn new(claim: &str, parameters: serde_json::Value, observed: f64, bound: f64, pass: bool) -> Self {
        Self {
            claim: claim.to_string(),
            parameters,
            observed,
            bound,
            pass,
            status: if pass { ClaimStatus::Pass } else { ClaimStatus::Fail },
        }
    }
}

/// Relative tolerance of the variance check.
pub const VARIANCE_TOL: f64 = 0.02;
/// The variance check is inconclusive when four standard errors exceed the tolerance.
pub const VARIANCE_SIGMAS: f64 = 4.0;
pub const REGRET_SLOPE_MAX: f64 = 0.6;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub hyper_params: HyperParams,
    pub mc_samples: usize,
    pub seed: u64,
    pub exec: Exec,
    pub lemma1_horizon: u64,
    pub lemma3_runs: usize,
    pub regret_horizon: usize,
    pub regret_alpha: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            hyper_params: HyperParams::default(),
            mc_samples: 1_000_000,
            seed: 0,
            exec: Exec::default(),
            lemma1_horizon: 100_000,
            lemma3_runs: 1000,
            regret_horizon: 10_000,
            regret_alpha: 1.0,
        }
    }
}

pub fn variance_claims(opts: &VerifyOptions) -> Result<Vec<ClaimReport>> {
    let mut out = Vec::new();
    for (i, beta1) in [0.5, 0.9, 0.99].into_iter().enumerate() {
        for (j, t) in [2u64, 10, 100].into_iter().enumerate() {
            let seed = crate::numeric::derive_seed(opts.seed, (i * 3 + j) as u64);
            let est = variance_ratio_mc(beta1, t, opts.mc_samples, seed, opts.exec)?;
            let rel = est.relative_error();
            let mut r = ClaimReport::new(
                "variance_ratio",
                json!({"beta1": beta1, "t": t, "samples": opts.mc_samples, "analytic": est.analytic_ratio}),
                rel,
                VARIANCE_TOL,
                rel <= VARIANCE_TOL,
            );
            if VARIANCE_SIGMAS * est.relative_std_error() > VARIANCE_TOL {
                r.status = ClaimStatus::Inconclusive;
            }
            out.push(r);
        }
    }
    let worst = [0.5, 0.9, 0.99]
        .into_iter()
        .flat_map(|b| [2u64, 3, 10, 100, 1000].map(move |t| (b, t)))
        .map(|(b, t)| super::variance::analytic_variance_ratio(b, t))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    out.push(ClaimReport::new(
        "variance_ratio_below_one",
        json!({"beta1": [0.5, 0.9, 0.99], "t": [2, 3, 10, 100, 1000]}),
        worst,
        1.0,
        worst < 1.0,
    ));
    Ok(out)
}

/// The 20 schedule/beta2 combinations of the step-size monotonicity check.
pub fn lemma1_grid() -> Vec<(f64, Beta1Schedule, f64)> {
    let schedules = [
        (0.9, Beta1Schedule::Constant),
        (0.99, Beta1Schedule::Constant),
        (0.9, Beta1Schedule::OverSqrtT),
        (0.9, Beta1Schedule::OverT),
    ];
    let mut grid = Vec::new();
    for beta2 in [0.0, 0.9, 0.99, 0.999, 0.9999] {
        for (b1, s) in schedules.iter().cloned() {
            grid.push((b1, s, beta2));
        }
    }
    grid
}

pub fn lemma1_claim(opts: &VerifyOptions) -> ClaimReport {
    let grid = lemma1_grid();
    let mut failing = Vec::new();
    for (b1, s, b2) in &grid {
        let series = alpha_hat_series(1.0, *b1, *s, *b2, opts.lemma1_horizon);
        if !strict_decrease_violations(&series).is_empty() {
            failing.push(json!({"beta1": b1, "schedule": s, "beta2": b2}));
        }
    }
    ClaimReport::new(
        "lemma1_step_size_decreasing",
        json!({"combinations": grid.len(), "horizon": opts.lemma1_horizon, "failing": failing}),
        failing.len() as f64,
        0.0,
        failing.is_empty(),
    )
}

pub fn lemma3_claim(opts: &VerifyOptions) -> Result<ClaimReport> {
    let (n, g, steps) = (4, 5.0, 500);
    let sweep = lemma3_random_runs(opts.lemma3_runs, n, g, steps, &opts.hyper_params, opts.seed, opts.exec)?;
    Ok(ClaimReport::new(
        "lemma3_preconditioner_bound",
        json!({"runs": sweep.runs, "n": n, "g_inf": g, "steps": steps}),
        sweep.max_ratio,
        1.0,
        sweep.max_ratio < 1.0,
    ))
}

pub fn regret_claims(opts: &VerifyOptions) -> Result<Vec<ClaimReport>> {
    let exp = RegretExperiment::random(2, opts.regret_horizon, 1.0, opts.seed)?;
    let hp = theory_mode(&opts.hyper_params.clone().with_alpha(opts.regret_alpha));
    let out = online_regret(&exp, OptimizerKind::AgdAmsgrad, &hp)?;
    let params = json!({"dim": 2, "horizon": opts.regret_horizon, "center_radius": 1.0, "alpha": opts.regret_alpha});
    Ok(vec![
        ClaimReport::new(
            "regret_slope",
            params.clone(),
            out.slope,
            REGRET_SLOPE_MAX,
            out.slope <= REGRET_SLOPE_MAX,
        ),
        ClaimReport::new("regret_nonnegative", params, out.final_regret, 0.0, out.final_regret >= 0.0),
    ])
}

pub fn amsgrad_claim(opts: &VerifyOptions) -> Result<ClaimReport> {
    let steps = 10_000;
    let v = amsgrad_monotonicity_violations(5, steps, &opts.hyper_params, opts.seed)?;
    Ok(ClaimReport::new(
        "amsgrad_monotone_b",
        json!({"n": 5, "steps": steps}),
        v as f64,
        0.0,
        v == 0,
    ))
}

/// Runs every claim. Hyperparameters are validated before anything runs.
pub fn verify_suite(opts: &VerifyOptions) -> Result<Vec<ClaimReport>> {
    opts.hyper_params.validate()?;
    if opts.mc_samples < 2 {
        return Err(Error::config("mc_samples", "must be at least 2"));
    }
    let mut out = variance_claims(opts)?;
    out.push(lemma1_claim(opts));
    out.push(lemma3_claim(opts)?);
    out.extend(regret_claims(opts)?);
    out.push(amsgrad_claim(opts)?);
    Ok(out)
}

/// True unless some claim has status `Fail`.
pub fn suite_passed(reports: &[ClaimReport]) -> bool {
    reports.iter().all(|r| r.status != ClaimStatus::Fail)
}
