//! Variance of the bias-corrected gradient EMA under i.i.d. gradients.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{derive_seed, pow_step, CompensatedSum};
use crate::par::{self, Exec};

/// Replicas per independently seeded chunk. Fixed so results do not depend
/// on the thread count.
pub const MC_CHUNK: usize = 1 << 14;

/// `Var[m_t / (1 - beta1^t)] / Var[g]` for uncorrelated stationary gradients:
/// `(1 + beta1^t)(1 - beta1) / ((1 - beta1^t)(1 + beta1))`.
pub fn analytic_variance_ratio(beta1: f64, t: u64) -> Result<f64> {
    if !(beta1 > 0.0 && beta1 < 1.0) {
        return Err(Error::Domain(format!("beta1 must lie in (0, 1), got {beta1}")));
    }
    if t == 0 {
        return Err(Error::InvalidStep(0));
    }
    let bt = pow_step(beta1, t);
    Ok((1.0 + bt) * (1.0 - beta1) / ((1.0 - bt) * (1.0 + beta1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceEstimate {
    pub beta1: f64,
    pub t: u64,
    pub samples: usize,
    pub empirical_ratio: f64,
    pub analytic_ratio: f64,
    /// Standard error of `empirical_ratio` under Gaussian gradients.
    pub std_error: f64,
}

impl VarianceEstimate {
    pub fn relative_error(&self) -> f64 {
        (self.empirical_ratio - self.analytic_ratio).abs() / self.analytic_ratio
    }

    /// Relative standard error of the variance estimate, `sqrt(2 / (N - 1))`.
    pub fn relative_std_error(&self) -> f64 {
        (2.0 / (self.samples as f64 - 1.0)).sqrt()
    }
}

#[derive(Default, Clone, Copy)]
struct Moments {
    count: usize,
    sum: CompensatedSum,
    sum_sq: CompensatedSum,
}

fn chunk_moments(beta1: f64, t: u64, bias: f64, count: usize, seed: u64) -> Moments {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mo = Moments {
        count,
        ..Moments::default()
    };
    for _ in 0..count {
        let mut m = 0.0;
        for _ in 0..t {
            let g: f64 = StandardNormal.sample(&mut rng);
            m = beta1 * m + (1.0 - beta1) * g;
        }
        let x = m / bias;
        mo.sum.add(x);
        mo.sum_sq.add(x * x);
    }
    mo
}

/// Monte-Carlo estimate of the variance ratio with unit-variance Gaussian
/// gradients, compared against [`analytic_variance_ratio`].
pub fn variance_ratio_mc(beta1: f64, t: u64, samples: usize, seed: u64, exec: Exec) -> Result<VarianceEstimate> {
    let analytic = analytic_variance_ratio(beta1, t)?;
    if samples < 2 {
        return Err(Error::Domain("need at least 2 Monte-Carlo samples".into()));
    }
    let bias = 1.0 - pow_step(beta1, t);
    let chunks = samples.div_ceil(MC_CHUNK);
    let parts = par::map_indexed(exec, chunks, |k| {
        let count = MC_CHUNK.min(samples - k * MC_CHUNK);
        chunk_moments(beta1, t, bias, count, derive_seed(seed, k as u64))
    });
    let mut total = Moments::default();
    for p in &parts {
        total.count += p.count;
        total.sum.merge(&p.sum);
        total.sum_sq.merge(&p.sum_sq);
    }
    let n = total.count as f64;
    let mean = total.sum.value() / n;
    let var = (total.sum_sq.value() - n * mean * mean) / (n - 1.0);
    Ok(VarianceEstimate {
        beta1,
        t,
        samples,
        empirical_ratio: var,
        analytic_ratio: analytic,
        std_error: var * (2.0 / (n - 1.0)).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_limits() {
        assert!((analytic_variance_ratio(0.9, 1).unwrap() - 1.0).abs() < 1e-15);
        let limit = analytic_variance_ratio(0.9, 10_000).unwrap();
        assert!((limit - 1.0 / 19.0).abs() < 1e-12);
        assert!(analytic_variance_ratio(1.0, 3).is_err());
        assert!(analytic_variance_ratio(0.0, 3).is_err());
    }

    #[test]
    fn analytic_below_one_after_first_step() {
        for b in [0.01, 0.3, 0.5, 0.9, 0.99, 0.999] {
            for t in [2u64, 3, 10, 100, 1000, 100_000] {
                assert!(analytic_variance_ratio(b, t).unwrap() < 1.0, "beta1={b} t={t}");
            }
        }
    }

    // Closed-form variance of the weighted sum, computed term by term.
    fn direct_sum_ratio(beta1: f64, t: u64) -> f64 {
        let bias = 1.0 - beta1.powi(t as i32);
        let s: f64 = (1..=t)
            .map(|i| ((1.0 - beta1) * beta1.powi((t - i) as i32)).powi(2))
            .sum();
        s / (bias * bias)
    }

    #[test]
    fn analytic_matches_direct_weight_sum() {
        for b in [0.5, 0.9, 0.99] {
            for t in [1u64, 2, 10, 100] {
                let a = analytic_variance_ratio(b, t).unwrap();
                assert!((a - direct_sum_ratio(b, t)).abs() < 1e-12 * a);
            }
        }
    }

    #[test]
    fn small_mc_is_close_and_deterministic() {
        let a = variance_ratio_mc(0.9, 10, 100_000, 1, Exec::Parallel).unwrap();
        let b = variance_ratio_mc(0.9, 10, 100_000, 1, Exec::Sequential).unwrap();
        assert_eq!(a, b);
        assert!(a.relative_error() < 5.0 * a.relative_std_error());
    }
}
