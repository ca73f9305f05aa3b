//! Synthetic datasets and deterministic minibatch streams.
//!
//! All randomness comes from ChaCha8 streams seeded through
//! [`derive_seed`](crate::numeric::derive_seed), so a dataset is a pure
//! function of its generator name, size, parameters and seed.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::numeric::derive_seed;

/// Row-major examples with their targets.
///
/// For classification losses `targets` holds one class index per example
/// (`target_dim == 1`); for squared error it holds the regression targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub inputs: Vec<f64>,
    pub in_dim: usize,
    pub targets: Vec<f64>,
    pub target_dim: usize,
    pub seed: u64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.len().checked_div(self.in_dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.in_dim..(i + 1) * self.in_dim]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.target_dim..(i + 1) * self.target_dim]
    }

    /// Class label of example `i` (classification datasets).
    pub fn label(&self, i: usize) -> usize {
        self.targets[i * self.target_dim] as usize
    }

    /// The examples at `idx`, in that order, as a new dataset.
    pub fn select(&self, idx: &[usize]) -> Dataset {
        let mut inputs = Vec::with_capacity(idx.len() * self.in_dim);
        let mut targets = Vec::with_capacity(idx.len() * self.target_dim);
        for &i in idx {
            inputs.extend_from_slice(self.input(i));
            targets.extend_from_slice(self.target(i));
        }
        Dataset {
            name: self.name.clone(),
            inputs,
            in_dim: self.in_dim,
            targets,
            target_dim: self.target_dim,
            seed: self.seed,
        }
    }

    /// CSV with a header row (`x0,..,x{d-1},y0,..`) and one example per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (0..self.in_dim)
            .map(|j| format!("x{j}"))
            .chain((0..self.target_dim).map(|j| format!("y{j}")))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for i in 0..self.len() {
            let row: Vec<String> = self
                .input(i)
                .iter()
                .chain(self.target(i))
                .map(|v| crate::diagnostics::fmt_f64(*v))
                .collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

const TWO_MOONS_STREAM: u64 = 0x6d6f_6f6e;

/// Two interleaved half circles: class 0 on the upper unit half circle
/// centred at the origin, class 1 on the lower unit half circle centred at
/// `(1, 0.5)`. Gaussian noise with standard deviation `noise` is added to
/// both coordinates. Class 0 gets `ceil(n / 2)` points.
pub fn gen_two_moons(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::config("n", "two moons needs at least 2 points"));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::config("noise", "must be finite and >= 0"));
    }
    let n_outer = n.div_ceil(2);
    let n_inner = n - n_outer;
    let angle = |k: usize, m: usize| {
        if m <= 1 {
            0.0
        } else {
            PI * k as f64 / (m - 1) as f64
        }
    };
    let mut inputs = Vec::with_capacity(2 * n);
    let mut targets = Vec::with_capacity(n);
    for k in 0..n_outer {
        let a = angle(k, n_outer);
        inputs.extend_from_slice(&[a.cos(), a.sin()]);
        targets.push(0.0);
    }
    for k in 0..n_inner {
        let a = angle(k, n_inner);
        inputs.extend_from_slice(&[1.0 - a.cos(), 0.5 - a.sin()]);
        targets.push(1.0);
    }
    if noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, TWO_MOONS_STREAM));
        let normal = Normal::new(0.0, noise).map_err(|e| Error::Domain(e.to_string()))?;
        for x in inputs.iter_mut() {
            *x += normal.sample(&mut rng);
        }
    }
    Ok(Dataset {
        name: "two_moons".into(),
        inputs,
        in_dim: 2,
        targets,
        target_dim: 1,
        seed,
    })
}

/// Endless sequence of minibatch index lists.
///
/// Each epoch visits a fresh permutation of `0..n` drawn from a ChaCha8
/// stream keyed by `(seed, epoch)`; the last batch of an epoch may be short.
#[derive(Debug, Clone)]
pub struct MinibatchStream {
    n: usize,
    batch_size: usize,
    seed: u64,
    epoch: u64,
    pos: usize,
    perm: Vec<usize>,
}

impl MinibatchStream {
    pub fn new(n: usize, batch_size: usize, seed: u64) -> Result<Self> {
        if batch_size == 0 || batch_size > n {
            return Err(Error::config(
                "batch_size",
                format!("must lie in 1..={n}, got {batch_size}"),
            ));
        }
        Ok(Self {
            n,
            batch_size,
            seed,
            epoch: 0,
            pos: 0,
            perm: epoch_permutation(n, seed, 0),
        })
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.n.div_ceil(self.batch_size)
    }

    /// Epoch of the next batch.
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn next_batch(&mut self) -> Vec<usize> {
        if self.pos >= self.n {
            self.epoch += 1;
            self.pos = 0;
            self.perm = epoch_permutation(self.n, self.seed, self.epoch);
        }
        let end = (self.pos + self.batch_size).min(self.n);
        let batch = self.perm[self.pos..end].to_vec();
        self.pos = end;
        batch
    }
}

impl Iterator for MinibatchStream {
    type Item = Vec<usize>;
    fn next(&mut self) -> Option<Vec<usize>> {
        Some(self.next_batch())
    }
}

/// `minibatch_stream(ds, batch_size, seed)`.
pub fn minibatch_stream(ds: &Dataset, batch_size: usize, seed: u64) -> Result<MinibatchStream> {
    MinibatchStream::new(ds.len(), batch_size, seed)
}

/// The permutation used for `epoch` of a stream with this seed.
pub fn epoch_permutation(n: usize, seed: u64, epoch: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, epoch));
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    perm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_points_on_half_circles() {
        let ds = gen_two_moons(4, 0.0, 1).unwrap();
        assert_eq!(ds.len(), 4);
        for i in 0..4 {
            let x = ds.input(i);
            let r = if ds.label(i) == 0 {
                x[0].hypot(x[1])
            } else {
                (x[0] - 1.0).hypot(x[1] - 0.5)
            };
            assert!((r - 1.0).abs() < 1e-15, "point {i}: {x:?}");
            if ds.label(i) == 0 {
                assert!(x[1] >= -1e-15);
            } else {
                assert!(x[1] <= 0.5 + 1e-15);
            }
        }
    }

    #[test]
    fn deterministic_and_balanced() {
        let a = gen_two_moons(1000, 0.1, 7).unwrap();
        let b = gen_two_moons(1000, 0.1, 7).unwrap();
        assert_eq!(a, b);
        let ones = (0..a.len()).filter(|&i| a.label(i) == 1).count();
        assert_eq!((a.len() - ones, ones), (500, 500));
        assert_ne!(a, gen_two_moons(1000, 0.1, 8).unwrap());
    }

    #[test]
    fn too_small_is_rejected() {
        assert!(gen_two_moons(1, 0.0, 0).is_err());
    }

    #[test]
    fn full_batch_epochs() {
        let mut s = MinibatchStream::new(5, 5, 3).unwrap();
        for _ in 0..4 {
            let mut b = s.next_batch();
            b.sort();
            assert_eq!(b, vec![0, 1, 2, 3, 4]);
        }
        assert_eq!(s.epoch(), 3);
    }

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<_> = MinibatchStream::new(10, 3, 9).unwrap().take(20).collect();
        let b: Vec<_> = MinibatchStream::new(10, 3, 9).unwrap().take(20).collect();
        assert_eq!(a, b);
        assert_eq!(a[3].len(), 1);
    }

    #[test]
    fn epoch_permutations_pinned() {
        let p0 = epoch_permutation(8, 7, 0);
        let p1 = epoch_permutation(8, 7, 1);
        assert_ne!(p0, p1);
        assert_eq!(p0, PINNED_SEED7_EPOCH0);
        assert_eq!(p1, PINNED_SEED7_EPOCH1);
    }

    const PINNED_SEED7_EPOCH0: [usize; 8] = [7, 1, 6, 3, 0, 2, 4, 5];
    const PINNED_SEED7_EPOCH1: [usize; 8] = [5, 0, 4, 2, 3, 1, 7, 6];

    #[test]
    fn batch_size_bounds() {
        assert!(MinibatchStream::new(4, 0, 0).is_err());
        assert!(MinibatchStream::new(4, 5, 0).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let ds = gen_two_moons(6, 0.0, 0).unwrap();
        let csv = ds.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "x0,x1,y0");
        assert_eq!(lines.len(), 7);
    }
}
