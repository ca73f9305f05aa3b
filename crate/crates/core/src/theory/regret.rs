//! Online convex regret on a projected stream of quadratics
//! `f_t(w) = 0.5 |w - c_t|^2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use std::sync::Arc;

use crate::diagnostics::Problem;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::optim::{Optimizer, OptimizerKind};
use crate::types::HyperParams;

#[derive(Debug, Clone, PartialEq)]
pub struct RegretExperiment {
    pub dim: usize,
    /// One center per step; `centers.len()` is the horizon.
    pub centers: Vec<Vec<f64>>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub start: Vec<f64>,
}

impl RegretExperiment {
    /// Centers uniform in `[-radius, radius]^dim`; the box adds a margin of 1
    /// and the first iterate sits in its upper corner.
    pub fn random(dim: usize, horizon: usize, radius: f64, seed: u64) -> Result<Self> {
        if dim == 0 || horizon == 0 {
            return Err(Error::config("problem.dim", "dimension and horizon must be positive"));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::config("problem.center_radius", "must be positive and finite"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers = (0..horizon)
            .map(|_| (0..dim).map(|_| rng.random_range(-radius..=radius)).collect())
            .collect();
        let upper = vec![radius + 1.0; dim];
        Ok(Self {
            dim,
            centers,
            lower: vec![-(radius + 1.0); dim],
            start: upper.clone(),
            upper,
        })
    }

    /// Every loss identical with its minimizer at `center`, started there.
    pub fn constant(center: Vec<f64>, horizon: usize, margin: f64) -> Self {
        Self {
            dim: center.len(),
            lower: center.iter().map(|c| c - margin).collect(),
            upper: center.iter().map(|c| c + margin).collect(),
            start: center.clone(),
            centers: vec![center; horizon],
        }
    }

    pub fn horizon(&self) -> usize {
        self.centers.len()
    }

    /// Offline minimizer of the summed losses: the mean center.
    pub fn w_star(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for (k, c) in self.centers.iter().enumerate() {
            for (m, x) in mean.iter_mut().zip(c) {
                *m += (x - *m) / (k as f64 + 1.0);
            }
        }
        mean
    }

    pub fn project(&self, w: &mut [f64]) {
        project_box(w, &self.lower, &self.upper);
    }

    fn validate(&self) -> Result<()> {
        if self.centers.iter().any(|c| c.len() != self.dim)
            || self.lower.len() != self.dim
            || self.upper.len() != self.dim
            || self.start.len() != self.dim
        {
            return Err(Error::config("problem", "inconsistent dimensions"));
        }
        if self.horizon() == 0 {
            return Err(Error::config("problem.horizon", "must be positive"));
        }
        let inside = |w: &[f64]| w.iter().zip(&self.lower).zip(&self.upper).all(|((x, l), u)| l <= x && x <= u);
        if !inside(&self.w_star()) {
            return Err(Error::config("problem", "offline minimizer lies outside the feasible box"));
        }
        if !inside(&self.start) {
            return Err(Error::config("problem", "start lies outside the feasible box"));
        }
        Ok(())
    }
}

/// Coordinatewise nearest point of `[lower, upper]`.
pub fn project_box(w: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((x, l), u) in w.iter_mut().zip(lower).zip(upper) {
        *x = x.clamp(*l, *u);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretOutcome {
    /// `regret[T-1] = sum_{t<=T} f_t(w_t) - min_w sum_{t<=T} f_t(w)`.
    pub regret: Vec<f64>,
    pub slope: f64,
    pub final_regret: f64,
}

/// Plays the stream with the given optimizer, projecting after every step.
pub fn online_regret(exp: &RegretExperiment, kind: OptimizerKind, hp: &HyperParams) -> Result<RegretOutcome> {
    exp.validate()?;
    let mut opt = Optimizer::new(kind, hp.clone(), exp.dim)?;
    let mut w = exp.start.clone();
    let mut g = vec![0.0; exp.dim];
    let mut played = CompensatedSum::new();
    // Welford over centers: min_w sum_{t<=T} f_t = 0.5 * sum |c_t - mean_T|^2
    let mut mean = vec![0.0; exp.dim];
    let mut m2 = CompensatedSum::new();
    let mut regret = Vec::with_capacity(exp.horizon());
    for (k, c) in exp.centers.iter().enumerate() {
        let mut loss = 0.0;
        for ((gi, wi), ci) in g.iter_mut().zip(&w).zip(c) {
            *gi = wi - ci;
            loss += 0.5 * *gi * *gi;
        }
        played.add(loss);
        let n = k as f64 + 1.0;
        for (mi, ci) in mean.iter_mut().zip(c) {
            let d = ci - *mi;
            *mi += d / n;
            m2.add(d * (ci - *mi));
        }
        regret.push(played.value() - 0.5 * m2.value());
        opt.step(&mut w, &g)?;
        exp.project(&mut w);
    }
    let final_regret = *regret.last().expect("non-empty horizon");
    Ok(RegretOutcome {
        slope: final_decade_slope(&regret),
        final_regret,
        regret,
    })
}

/// Least-squares slope of `ln max(R_T, 1)` against `ln T` on up to 50
/// log-spaced horizons in the final decade.
pub fn final_decade_slope(regret: &[f64]) -> f64 {
    let horizon = regret.len();
    let lo = (horizon / 10).max(1);
    if horizon < 2 || lo >= horizon {
        return f64::NAN;
    }
    let (a, b) = ((lo as f64).ln(), (horizon as f64).ln());
    let mut ts: Vec<usize> = (0..50)
        .map(|k| (a + (b - a) * k as f64 / 49.0).exp().round() as usize)
        .map(|t| t.clamp(lo, horizon))
        .collect();
    ts.dedup();
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .map(|&t| ((t as f64).ln(), regret[t - 1].max(1.0).ln()))
        .collect();
    least_squares_slope(&pts)
}

pub fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// The stream as a [`Problem`]: each call plays the next loss.
#[derive(Debug, Clone)]
pub struct RegretProblem {
    exp: Arc<RegretExperiment>,
    next: usize,
}

impl RegretProblem {
    pub fn new(exp: Arc<RegretExperiment>) -> Result<Self> {
        exp.validate()?;
        Ok(Self { exp, next: 0 })
    }
}

impl Problem for RegretProblem {
    fn name(&self) -> String {
        format!("regret/dim{}", self.exp.dim)
    }

    fn dim(&self) -> usize {
        self.exp.dim
    }

    fn initial_point(&self) -> Vec<f64> {
        self.exp.start.clone()
    }

    fn loss_grad(&mut self, w: &[f64], grad: &mut [f64]) -> Result<f64> {
        let c = self
            .exp
            .centers
            .get(self.next)
            .ok_or_else(|| Error::Domain(format!("loss stream exhausted after {} steps", self.next)))?;
        self.next += 1;
        let mut loss = 0.0;
        for ((gi, wi), ci) in grad.iter_mut().zip(w).zip(c) {
            *gi = wi - ci;
            loss += 0.5 * *gi * *gi;
        }
        Ok(loss)
    }

    fn project(&self, w: &mut [f64]) {
        self.exp.project(w);
    }
}
