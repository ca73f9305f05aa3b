use agd_core::numeric::ulps_between;
use agd_core::optim::{truncation_fraction_from_bhat, AgdState};
use agd_core::{optimizer_step, GradVector, HyperParams, Optimizer, OptimizerKind, OptimizerState, ParamVector};
use proptest::prelude::*;

fn agd_state(opt: &Optimizer) -> &AgdState {
    match opt.state() {
        OptimizerState::Agd(s) => s,
        _ => unreachable!("not an AGD optimizer"),
    }
}

fn grad_stream(n: usize, steps: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, n), steps)
}

/// Bias-corrected momentum and step of the floor branch, computed independently.
struct MomentumReference {
    m_hat: Vec<f64>,
    t: i32,
}

impl MomentumReference {
    fn step(&mut self, g: &[f64], hp: &HyperParams) -> Vec<f64> {
        self.t += 1;
        let bias1 = 1.0 - hp.beta1.powi(self.t);
        let gain = if self.t == 1 { 1.0 } else { (1.0 - hp.beta1) / bias1 };
        self.m_hat
            .iter_mut()
            .zip(g)
            .map(|(m, g)| {
                *m += gain * (g - *m);
                -(hp.alpha / hp.delta) * *m
            })
            .collect()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn step_bounded_by_floor(stream in grad_stream(4, 40), delta in 1e-6f64..1.0, alpha in 1e-4f64..1.0) {
        let hp = HyperParams::default().with_alpha(alpha).with_delta(delta);
        let mut opt = Optimizer::new(OptimizerKind::Agd, hp.clone(), 4).unwrap();
        let mut w = vec![0.0; 4];
        for (k, g) in stream.iter().enumerate() {
            let before = w.clone();
            opt.step(&mut w, g).unwrap();
            let t = k as i32 + 1;
            let st = agd_state(&opt);
            let bias1 = 1.0 - hp.beta1.powi(t);
            let m_inf = st.m.iter().fold(0.0f64, |a, m| a.max(m.abs()));
            let bound = alpha * m_inf / (bias1 * delta);
            for (a, b) in w.iter().zip(&before) {
                prop_assert!((a - b).abs() <= bound * (1.0 + 1e-12) + 1e-300);
            }
            let floor = delta * (1.0 - hp.beta2.powi(t)).sqrt();
            prop_assert!(st.b.iter().all(|b| b.sqrt().max(floor) >= floor && *b >= 0.0));
        }
    }

    #[test]
    fn large_delta_is_momentum_sgd(stream in grad_stream(3, 60)) {
        let hp = HyperParams::default().with_alpha(0.05).with_delta(1e6);
        let mut opt = Optimizer::new(OptimizerKind::Agd, hp.clone(), 3).unwrap();
        let mut reference = MomentumReference { m_hat: vec![0.0; 3], t: 0 };
        let mut w = vec![0.0; 3];
        let mut w_ref = vec![0.0; 3];
        for g in &stream {
            let d = opt.step(&mut w, g).unwrap();
            prop_assert_eq!(d.truncation_fraction, 1.0);
            for (wr, u) in w_ref.iter_mut().zip(reference.step(g, &hp)) {
                *wr += u;
            }
            prop_assert_eq!(&w, &w_ref);
        }
    }

    #[test]
    fn amsgrad_b_never_decreases(stream in grad_stream(5, 80)) {
        let mut opt = Optimizer::new(OptimizerKind::AgdAmsgrad, HyperParams::default(), 5).unwrap();
        let mut w = vec![0.0; 5];
        let mut prev = vec![0.0; 5];
        for g in &stream {
            opt.step(&mut w, g).unwrap();
            let b = &agd_state(&opt).b;
            prop_assert!(b.iter().zip(&prev).all(|(x, p)| x >= p));
            prev.clone_from(b);
        }
    }

    #[test]
    fn adaptive_branch_scale_invariant(stream in grad_stream(3, 50), c in prop::sample::select(vec![10.0, 1000.0, 0.01])) {
        // keep every coordinate away from zero so sqrt(b) stays far above the floor
        let stream: Vec<Vec<f64>> = stream
            .into_iter()
            .map(|g| g.into_iter().map(|x| if x.abs() < 0.1 { 0.1f64.copysign(x) } else { x }).collect())
            .collect();
        let hp = HyperParams::default().with_alpha(1e-2).with_delta(1e-12);
        let mut a = Optimizer::new(OptimizerKind::Agd, hp.clone(), 3).unwrap();
        let mut b = Optimizer::new(OptimizerKind::Agd, hp, 3).unwrap();
        let mut wa = vec![3.0; 3];
        let mut wb = vec![3.0; 3];
        for g in &stream {
            let scaled: Vec<f64> = g.iter().map(|x| c * x).collect();
            let da = a.step(&mut wa, g).unwrap();
            let db = b.step(&mut wb, &scaled).unwrap();
            prop_assert_eq!(da.truncation_fraction, 0.0);
            prop_assert_eq!(db.truncation_fraction, 0.0);
            for (x, y) in wa.iter().zip(&wb) {
                prop_assert!(ulps_between(*x, *y) <= 8, "{} vs {}", x, y);
            }
        }
    }

    #[test]
    fn truncation_monotone_in_delta(stream in grad_stream(6, 30)) {
        let hp = HyperParams::default();
        let mut opt = Optimizer::new(OptimizerKind::Agd, hp.clone(), 6).unwrap();
        let mut w = vec![0.0; 6];
        let deltas: Vec<f64> = (-12..=2).map(|k| 10f64.powi(k)).collect();
        for g in &stream {
            opt.step(&mut w, g).unwrap();
            let bhat = agd_state(&opt).bhat(hp.beta2);
            let fr: Vec<f64> = deltas.iter().map(|d| truncation_fraction_from_bhat(&bhat, *d)).collect();
            prop_assert!(fr.windows(2).all(|p| p[0] <= p[1]));
        }
    }
}

#[test]
fn bias_corrected_constant_gradient_is_exact() {
    for g in [1.0, -3.7, 1e-5, 250.0] {
        let mut opt = Optimizer::new(OptimizerKind::Agd, HyperParams::default(), 1).unwrap();
        let mut w = vec![0.0];
        for t in 1..=10_000u64 {
            opt.step(&mut w, &[g]).unwrap();
            let corrected = agd_state(&opt).prev_corrected[0];
            assert_eq!(corrected, g, "t {t}");
        }
    }
}

#[test]
fn first_step_hand_value() {
    let hp = HyperParams::default();
    let st = OptimizerState::new(OptimizerKind::Agd, 1);
    let (_, w, d) = optimizer_step(
        &st,
        &ParamVector::new(vec![0.0]).unwrap(),
        &GradVector::new(vec![1.0]).unwrap(),
        1,
        &hp,
    )
    .unwrap();
    assert!(ulps_between(w[0], -1e-3) <= 4);
    assert_eq!(d.truncation_fraction, 0.0);
    assert_eq!(d.bhat_histogram.total(), 1);
}

#[test]
fn zero_delta_rejected_with_field() {
    let hp = HyperParams::default().with_delta(0.0);
    match Optimizer::new(OptimizerKind::Agd, hp, 2) {
        Err(agd_core::Error::Config { field, .. }) => assert_eq!(field, "delta"),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn histogram_counts_sum_to_dimension() {
    for kind in OptimizerKind::ALL {
        let mut opt = Optimizer::new(kind, HyperParams::default(), 7).unwrap();
        let mut w = vec![0.5; 7];
        for k in 0..5 {
            let g: Vec<f64> = (0..7).map(|i| ((i * 3 + k) as f64).sin()).collect();
            let d = opt.step(&mut w, &g).unwrap();
            assert_eq!(d.bhat_histogram.total(), 7, "{kind}");
            assert!((0.0..=1.0).contains(&d.truncation_fraction));
            assert!(d.step_norm >= 0.0);
        }
    }
}
