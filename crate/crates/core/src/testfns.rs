//! Two-dimensional analytic benchmark functions with closed-form gradients
//! and Hessians.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::l2_norm;

/// Value, gradient and Hessian diagonal at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eval2 {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess_diag: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFn {
    /// `(x + y)^2 + (x - y)^2 / 10`
    QuadSkew,
    /// `(1.5 - x + xy)^2 + (2.25 - x + xy^2)^2 + (2.625 - x + xy^3)^2`
    Beale,
    /// `(1 - x)^2 + 100 (y - x^2)^2`
    Rosenbrock,
}

impl TestFn {
    pub const ALL: [TestFn; 3] = [TestFn::QuadSkew, TestFn::Beale, TestFn::Rosenbrock];

    pub fn name(self) -> &'static str {
        match self {
            TestFn::QuadSkew => "quad_skew",
            TestFn::Beale => "beale",
            TestFn::Rosenbrock => "rosenbrock",
        }
    }

    pub fn dim(self) -> usize {
        2
    }

    pub fn optimum(self) -> [f64; 2] {
        match self {
            TestFn::QuadSkew => [0.0, 0.0],
            TestFn::Beale => [3.0, 0.5],
            TestFn::Rosenbrock => [1.0, 1.0],
        }
    }

    pub fn fmin(self) -> f64 {
        0.0
    }

    /// Committed start point for trajectory races.
    pub fn default_start(self) -> [f64; 2] {
        match self {
            TestFn::QuadSkew => [2.0, 1.0],
            TestFn::Beale => [0.0, 0.0],
            TestFn::Rosenbrock => [-2.0, 2.0],
        }
    }

    pub fn value(self, p: [f64; 2]) -> f64 {
        self.eval(p).value
    }

    pub fn grad(self, p: [f64; 2]) -> [f64; 2] {
        self.eval(p).grad
    }

    pub fn hess_diag(self, p: [f64; 2]) -> [f64; 2] {
        self.eval(p).hess_diag
    }

    pub fn eval(self, p: [f64; 2]) -> Eval2 {
        match self {
            TestFn::QuadSkew => quad_skew(p),
            TestFn::Beale => beale(p),
            TestFn::Rosenbrock => rosenbrock(p),
        }
    }

    /// Full symmetric Hessian `[[fxx, fxy], [fxy, fyy]]`.
    pub fn hessian(self, [x, y]: [f64; 2]) -> [[f64; 2]; 2] {
        let e = self.eval([x, y]);
        let fxy = match self {
            TestFn::QuadSkew => 1.8,
            TestFn::Beale => {
                let (y2, y3) = (y * y, y * y * y);
                let r = [1.5 - x + x * y, 2.25 - x + x * y2, 2.625 - x + x * y3];
                let dx = [y - 1.0, y2 - 1.0, y3 - 1.0];
                let dy = [x, 2.0 * x * y, 3.0 * x * y2];
                let dxy = [1.0, 2.0 * y, 3.0 * y2];
                2.0 * (0..3).map(|k| dx[k] * dy[k] + r[k] * dxy[k]).sum::<f64>()
            }
            TestFn::Rosenbrock => -400.0 * x,
        };
        [[e.hess_diag[0], fxy], [fxy, e.hess_diag[1]]]
    }
}

impl fmt::Display for TestFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestFn {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TestFn::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::config("problem.name", format!("unknown test function `{s}`")))
    }
}

pub fn quad_skew([x, y]: [f64; 2]) -> Eval2 {
    let (sum, diff) = (x + y, x - y);
    Eval2 {
        value: sum * sum + diff * diff / 10.0,
        grad: [2.0 * sum + diff / 5.0, 2.0 * sum - diff / 5.0],
        hess_diag: [2.2, 2.2],
    }
}

pub fn beale([x, y]: [f64; 2]) -> Eval2 {
    let (y2, y3) = (y * y, y * y * y);
    let r = [1.5 - x + x * y, 2.25 - x + x * y2, 2.625 - x + x * y3];
    let dx = [y - 1.0, y2 - 1.0, y3 - 1.0];
    let dy = [x, 2.0 * x * y, 3.0 * x * y2];
    let dyy = [0.0, 2.0 * x, 6.0 * x * y];
    let mut e = Eval2 {
        value: 0.0,
        grad: [0.0; 2],
        hess_diag: [0.0; 2],
    };
    for k in 0..3 {
        e.value += r[k] * r[k];
        e.grad[0] += 2.0 * r[k] * dx[k];
        e.grad[1] += 2.0 * r[k] * dy[k];
        e.hess_diag[0] += 2.0 * dx[k] * dx[k];
        e.hess_diag[1] += 2.0 * (dy[k] * dy[k] + r[k] * dyy[k]);
    }
    e
}

pub fn rosenbrock([x, y]: [f64; 2]) -> Eval2 {
    let a = 1.0 - x;
    let b = y - x * x;
    Eval2 {
        value: a * a + 100.0 * b * b,
        grad: [-2.0 * a - 400.0 * x * b, 200.0 * b],
        hess_diag: [2.0 - 400.0 * y + 1200.0 * x * x, 200.0],
    }
}

/// Residual of the gradient-difference approximation for one pair of points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairResidual {
    /// Index of the later point of the pair.
    pub index: usize,
    pub step_norm: f64,
    /// `|grad(w_t) - grad(w_{t-1}) - H(w_t) dw| / max(|grad diff|, |H dw|)`
    pub relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HessianCheckReport {
    pub function: TestFn,
    pub pairs: Vec<PairResidual>,
    /// Consecutive pairs with zero displacement.
    pub skipped: usize,
    pub max_relative_residual: f64,
}

/// Compares adjacent gradient differences with `H(w_t) (w_t - w_{t-1})` along
/// a sequence of points.
pub fn hessian_diag_vs_gradient_difference<P: AsRef<[f64]>>(
    f: TestFn,
    points: &[P],
) -> Result<HessianCheckReport> {
    if points.len() < 2 {
        return Err(Error::Domain("need at least two points".into()));
    }
    let as2 = |p: &P| -> Result<[f64; 2]> {
        let p = p.as_ref();
        if p.len() != 2 {
            return Err(Error::Shape {
                what: "test-function point",
                expected: 2,
                got: p.len(),
            });
        }
        Ok([p[0], p[1]])
    };
    let mut report = HessianCheckReport {
        function: f,
        pairs: Vec::new(),
        skipped: 0,
        max_relative_residual: 0.0,
    };
    for (k, pair) in points.windows(2).enumerate() {
        let (prev, cur) = (as2(&pair[0])?, as2(&pair[1])?);
        let dw = [cur[0] - prev[0], cur[1] - prev[1]];
        let step_norm = l2_norm(&dw);
        if step_norm == 0.0 {
            report.skipped += 1;
            continue;
        }
        let (g1, g0) = (f.grad(cur), f.grad(prev));
        let dg = [g1[0] - g0[0], g1[1] - g0[1]];
        let h = f.hessian(cur);
        let pred = [
            h[0][0] * dw[0] + h[0][1] * dw[1],
            h[1][0] * dw[0] + h[1][1] * dw[1],
        ];
        let scale = l2_norm(&dg).max(l2_norm(&pred));
        let resid = l2_norm(&[dg[0] - pred[0], dg[1] - pred[1]]);
        let rel = if scale > 0.0 { resid / scale } else { 0.0 };
        report.max_relative_residual = report.max_relative_residual.max(rel);
        report.pairs.push(PairResidual {
            index: k + 1,
            step_norm,
            relative_residual: rel,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
    }

    // central differences, independent of the closed forms
    fn fd_grad(f: TestFn, p: [f64; 2], h: f64) -> [f64; 2] {
        let mut g = [0.0; 2];
        for i in 0..2 {
            let (mut a, mut b) = (p, p);
            a[i] += h;
            b[i] -= h;
            g[i] = (f.value(a) - f.value(b)) / (2.0 * h);
        }
        g
    }

    fn fd_hess_diag(f: TestFn, p: [f64; 2], h: f64) -> [f64; 2] {
        let mut d = [0.0; 2];
        for i in 0..2 {
            let (mut a, mut b) = (p, p);
            a[i] += h;
            b[i] -= h;
            d[i] = (f.grad(a)[i] - f.grad(b)[i]) / (2.0 * h);
        }
        d
    }

    #[test]
    fn beale_examples() {
        let e = beale([3.0, 0.5]);
        assert_eq!(e.value, 0.0);
        assert_eq!(e.grad, [0.0, 0.0]);
        assert_eq!(beale([0.0, 0.0]).value, 14.203125);
        let fd = fd_grad(TestFn::Beale, [1.0, 1.0], 1e-6);
        let g = beale([1.0, 1.0]).grad;
        for i in 0..2 {
            assert!(close(g[i], fd[i], 1e-6), "{g:?} {fd:?}");
        }
    }

    #[test]
    fn rosenbrock_examples() {
        let e = rosenbrock([1.0, 1.0]);
        assert_eq!((e.value, e.grad), (0.0, [0.0, 0.0]));
        assert_eq!(e.hess_diag, [802.0, 200.0]);
        let e = rosenbrock([0.0, 0.0]);
        assert_eq!((e.value, e.grad), (1.0, [-2.0, 0.0]));
        let fd = fd_hess_diag(TestFn::Rosenbrock, [1.0, 1.0], 1e-6);
        assert!(close(fd[0], 802.0, 1e-6) && close(fd[1], 200.0, 1e-6));
    }

    #[test]
    fn quad_skew_examples() {
        let e = quad_skew([0.0, 0.0]);
        assert_eq!((e.value, e.grad), (0.0, [0.0, 0.0]));
        let e = quad_skew([1.0, -1.0]);
        assert!((e.value - 0.4).abs() < 1e-15);
        assert!((e.grad[0] - 0.4).abs() < 1e-15 && (e.grad[1] + 0.4).abs() < 1e-15);
        assert_eq!(quad_skew([-3.2, 7.0]).hess_diag, [2.2, 2.2]);
    }

    #[test]
    fn optimum_is_stationary() {
        for f in TestFn::ALL {
            let e = f.eval(f.optimum());
            assert!((e.value - f.fmin()).abs() <= 1e-12);
            assert!(e.grad.iter().all(|g| g.abs() <= 1e-12), "{f}");
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for f in TestFn::ALL {
            for _ in 0..100 {
                let p = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
                let (g, fd) = (f.grad(p), fd_grad(f, p, 1e-6));
                let (h, fdh) = (f.hess_diag(p), fd_hess_diag(f, p, 1e-6));
                for i in 0..2 {
                    assert!(close(g[i], fd[i], 1e-6), "{f} grad at {p:?}: {g:?} vs {fd:?}");
                    assert!(close(h[i], fdh[i], 1e-6), "{f} hess at {p:?}: {h:?} vs {fdh:?}");
                }
            }
        }
    }

    #[test]
    fn off_diagonal_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for f in TestFn::ALL {
            for _ in 0..50 {
                let p = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
                let h = 1e-6;
                let fd = (f.grad([p[0], p[1] + h])[0] - f.grad([p[0], p[1] - h])[0]) / (2.0 * h);
                assert!(close(f.hessian(p)[0][1], fd, 1e-6), "{f} at {p:?}");
            }
        }
    }

    #[test]
    fn quad_skew_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let (x, y) = (rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
            assert_eq!(quad_skew([x, y]).value, quad_skew([y, x]).value);
        }
    }

    #[test]
    fn gradient_difference_exact_on_quadratic() {
        let pts = vec![vec![1.0, 2.0], vec![0.5, -1.25], vec![-3.0, 0.125]];
        let r = hessian_diag_vs_gradient_difference(TestFn::QuadSkew, &pts).unwrap();
        assert_eq!(r.pairs.len(), 2);
        assert!(r.max_relative_residual <= 1e-15, "{}", r.max_relative_residual);
    }

    #[test]
    fn gradient_difference_small_steps_on_beale() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut worst: f64 = 0.0;
        for _ in 0..2000 {
            let base = [2.0 + rng.random_range(-0.1..0.1), 0.4 + rng.random_range(-0.1..0.1)];
            let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let next = [base[0] + 1e-4 * angle.cos(), base[1] + 1e-4 * angle.sin()];
            let r = hessian_diag_vs_gradient_difference(TestFn::Beale, &[base, next]).unwrap();
            worst = worst.max(r.max_relative_residual);
        }
        assert!(worst < 1e-2, "worst residual {worst}");
    }

    #[test]
    fn zero_length_step_is_skipped() {
        let pts = [[1.0, 1.0], [1.0, 1.0]];
        let r = hessian_diag_vs_gradient_difference(TestFn::Beale, &pts).unwrap();
        assert_eq!(r.skipped, 1);
        assert!(r.pairs.is_empty());
    }
}
