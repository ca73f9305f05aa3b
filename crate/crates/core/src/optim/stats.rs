//! Per-step optimizer statistics.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// Number of decade bins between [`HIST_LOW`] and [`HIST_HIGH`].
pub const HIST_BINS: usize = 18;
pub const HIST_LOW_EXP: i32 = -16;
pub const HIST_LOW: f64 = 1e-16;
pub const HIST_HIGH: f64 = 1e2;

fn edges() -> &'static [f64; HIST_BINS + 1] {
    static EDGES: OnceLock<[f64; HIST_BINS + 1]> = OnceLock::new();
    EDGES.get_or_init(|| {
        let mut e = [0.0; HIST_BINS + 1];
        for (k, slot) in e.iter_mut().enumerate() {
            // parse so that each edge is the double nearest to the power of ten
            *slot = format!("1e{}", HIST_LOW_EXP + k as i32).parse().unwrap();
        }
        e
    })
}

/// Log10-binned counts of preconditioner magnitudes.
///
/// Bin `k` holds values in `[10^(k-16), 10^(k-15))`. Zero and anything below
/// `1e-16` goes to `underflow`, anything at or above `1e2` to `overflow`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Histogram {
    pub counts: [u64; HIST_BINS],
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        let mut h = Histogram::default();
        for v in values {
            h.insert(v);
        }
        h
    }

    pub fn insert(&mut self, value: f64) {
        let e = edges();
        if value.is_nan() || value < e[0] {
            self.underflow += 1;
        } else if value >= e[HIST_BINS] {
            self.overflow += 1;
        } else {
            // first edge strictly greater than value, minus one
            let k = e.partition_point(|edge| *edge <= value) - 1;
            self.counts[k] += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    /// Lower edge of bin `k`.
    pub fn bin_low(k: usize) -> f64 {
        edges()[k]
    }

    /// Bounds on the fraction of entries strictly below `threshold`.
    ///
    /// The lower bound counts only bins lying entirely below the threshold;
    /// the upper bound adds the bin that contains it.
    pub fn fraction_below(&self, threshold: f64) -> (f64, f64) {
        let n = self.total();
        if n == 0 {
            return (0.0, 0.0);
        }
        let e = edges();
        let mut sure = 0u64;
        let mut maybe = 0u64;
        if threshold > e[0] {
            sure += self.underflow;
        } else if threshold > 0.0 {
            maybe += self.underflow;
        }
        for k in 0..HIST_BINS {
            let (lo, hi) = (e[k], e[k + 1]);
            if hi <= threshold {
                sure += self.counts[k];
            } else if lo < threshold {
                maybe += self.counts[k];
            }
        }
        if threshold > e[HIST_BINS] {
            maybe += self.overflow;
        }
        (sure as f64 / n as f64, (sure + maybe) as f64 / n as f64)
    }
}

/// Statistics reported by every optimizer step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    /// Fraction of coordinates that took the floor (SGD-like) branch.
    pub truncation_fraction: f64,
    /// Histogram of the bias-corrected preconditioner root, `sqrt(b_t / (1 - beta2^t))`
    /// for AGD and `sqrt(v_t / (1 - beta2^t))` for the Adam family.
    pub bhat_histogram: Histogram,
    /// Euclidean norm of the applied parameter change.
    pub step_norm: f64,
    /// Smallest and largest per-coordinate multiplier applied to the
    /// bias-corrected first moment.
    pub effective_lr_minmax: (f64, f64),
}

/// Fraction of entries with `bhat < delta`.
pub fn truncation_fraction_from_bhat(bhat: &[f64], delta: f64) -> f64 {
    if bhat.is_empty() {
        return 0.0;
    }
    bhat.iter().filter(|&&b| b < delta).count() as f64 / bhat.len() as f64
}
