mod common;

use std::sync::atomic::{AtomicUsize, Ordering};

use advbound::attacks::{
    carlini_wagner_l2, deepfool_l2, ead_l1, early_stopping_attack, hopskipjump, second_attack,
    AttackConfig, SecondAttackConfig, SecondAttackKind,
};
use advbound::oracle::AffineClassifier;
use advbound::{Classifier, DecisionModel, Layer, NormKind, Network64, Result, Tensor64};
use common::affine_suite;
use proptest::prelude::*;

fn binary(w: Vec<f64>, bias_gap: f64) -> Network64 {
    let d = w.len();
    Network64::new(vec![Layer::dense(vec![vec![0.0; d], w], vec![bias_gap, 0.0]).unwrap()], 2).unwrap()
}

/// Margin 1 at x = (0.5, 0.5) with w_diff = (3, 4).
fn three_four() -> (Network64, Tensor64) {
    (binary(vec![3.0, 4.0], 4.5), Tensor64::from_vec(vec![0.5, 0.5]))
}

#[test]
fn every_attack_is_sound_on_the_affine_suite() {
    for (i, case) in affine_suite(40, 77).iter().enumerate() {
        let mut results = Vec::new();
        for p in NormKind::ALL {
            let cfg = AttackConfig::defaults_for(p).with_max_iters(50_000);
            results.push((p, early_stopping_attack(&case.net, &case.x, case.label, &cfg).unwrap()));
            let second = SecondAttackConfig::for_norm(p).with_seed(i as u64);
            results.push((p, second_attack(&case.net, &case.x, case.label, p, &second).unwrap()));
        }
        results.push((NormKind::Two, deepfool_l2(&case.net, &case.x, case.label, 50, 0.02).unwrap()));
        for (p, r) in results {
            assert!(r.x_adv.in_unit_box());
            if r.success {
                assert_ne!(case.net.forward(&r.x_adv).unwrap().label, case.label);
                assert!(r.distance >= case.oracle(p) - 1e-9, "case {i} L{p}: {} < {}", r.distance, case.oracle(p));
            }
        }
    }
}

#[test]
fn early_stopping_is_tight_on_two_class_affine_nets() {
    let suite: Vec<_> = affine_suite(150, 31).into_iter().filter(|c| c.clf.num_classes() == 2).collect();
    assert!(suite.len() >= 10);
    for case in &suite {
        for p in NormKind::ALL {
            let cfg = AttackConfig::defaults_for(p).with_max_iters(100_000);
            let r = early_stopping_attack(&case.net, &case.x, case.label, &cfg).unwrap();
            let o = case.oracle(p);
            let upper = if p == NormKind::Infinity { o + cfg.eps_step } else { 1.05 * o + cfg.eps_step };
            assert!(r.success && r.distance >= o - 1e-12 && r.distance <= upper, "L{p}: {} vs {o}", r.distance);
        }
    }
}

#[test]
fn early_stopping_flips_at_the_first_step_past_the_boundary() {
    // boundary at x0 = 0.31 from x0 = 0.68
    let net = Network64::new(
        vec![Layer::dense(vec![vec![1.0], vec![-1.0]], vec![-0.31, 0.31]).unwrap()],
        2,
    )
    .unwrap();
    let x = Tensor64::from_vec(vec![0.68]);
    let r = early_stopping_attack(&net, &x, 0, &AttackConfig::new(NormKind::Infinity, 0.05, 500)).unwrap();
    assert!(r.success);
    assert_eq!(r.iterations_used, 8);
    assert!((r.distance - 0.40).abs() < 1e-12);
    let short = early_stopping_attack(&net, &x, 0, &AttackConfig::new(NormKind::Infinity, 0.05, 7)).unwrap();
    assert!(!short.success);
    assert_eq!(short.iterations_used, 7);
}

#[test]
fn single_step_when_the_step_covers_the_distance() {
    let (net, x) = three_four();
    let r = early_stopping_attack(&net, &x, 0, &AttackConfig::new(NormKind::Two, 0.5, 10)).unwrap();
    assert_eq!(r.iterations_used, 1);
    assert!((r.distance - 0.5).abs() < 1e-12);
}

#[test]
fn deepfool_closed_forms() {
    let (net, x) = three_four();
    let r = deepfool_l2(&net, &x, 0, 50, 0.0).unwrap();
    assert_eq!(r.iterations_used, 1);
    assert!((r.distance - 0.2).abs() < 1e-6);
    let r = deepfool_l2(&net, &x, 0, 50, 0.02).unwrap();
    assert!((r.distance - 0.204).abs() < 1e-6);
}

#[test]
fn deepfool_converges_in_one_step_on_three_classes() {
    let clf = AffineClassifier::new(
        vec![vec![1.0, 0.2, -0.3], vec![-0.4, 1.1, 0.5], vec![0.3, -0.8, 1.2]],
        vec![0.5, 0.0, -0.1],
    )
    .unwrap();
    let net = clf.to_network().unwrap();
    let x = Tensor64::from_vec(vec![0.55, 0.45, 0.5]);
    let y = clf.predict(&x).label;
    let oracle = advbound::oracle::affine_min_distance(&clf, &x, NormKind::Two).unwrap().distance;
    let r = deepfool_l2(&net, &x, y, 50, 0.0).unwrap();
    assert_eq!(r.iterations_used, 1);
    assert!((r.distance - oracle).abs() < 1e-6);
}

#[test]
fn carlini_wagner_on_the_binary_example() {
    let (net, x) = three_four();
    let r = carlini_wagner_l2(&net, &x, 0, &SecondAttackConfig::for_norm(NormKind::Two)).unwrap();
    assert!(r.success);
    assert!(r.distance >= 0.2 - 1e-9 && r.distance <= 0.2 * 1.05, "{}", r.distance);
}

#[test]
fn carlini_wagner_on_a_relu_net_respects_the_grid_bound() {
    let net = Network64::random_relu(&[2, 8, 8, 2], 12).unwrap();
    let x = Tensor64::from_vec(vec![0.4, 0.6]);
    let y = net.forward(&x).unwrap().label;
    let r = carlini_wagner_l2(&net, &x, y, &SecondAttackConfig::for_norm(NormKind::Two)).unwrap();
    if r.success {
        let grid = 1e-3;
        let brute = advbound::oracle::brute_force_min_distance(&net, &x, NormKind::Two, grid, r.distance + 2.0 * grid)
            .unwrap()
            .unwrap();
        assert!(r.distance >= brute - grid, "{} vs {brute}", r.distance);
    }
}

/// With the default step and shrinkage, EAD's fixed point is the
/// minimiser of `‖δ‖₂² + (β/lr)‖δ‖₁` on the boundary. For w = (3, 4),
/// margin 1, that point has L1 norm (14 − β/lr) / 50.
#[test]
fn ead_reaches_the_elastic_net_minimiser() {
    let (net, x) = three_four();
    let mut cfg = SecondAttackConfig::for_norm(NormKind::One);
    cfg.iterations = 1000;
    let r = ead_l1(&net, &x, 0, &cfg).unwrap();
    let gamma = cfg.ead.beta / cfg.ead.learning_rate;
    let expected = (14.0 - gamma) / 50.0;
    assert!(r.success);
    assert!(r.distance >= 0.25);
    assert!((r.distance - expected).abs() < 1e-3, "{} vs {expected}", r.distance);
}

#[test]
fn ead_shrinkage_buys_sparsity() {
    // sparse optimum: almost all the weight on the second coordinate
    let net = binary(vec![0.5, 4.0], 3.25);
    let x = Tensor64::from_vec(vec![0.5, 0.5]);
    let mut cfg = SecondAttackConfig::for_norm(NormKind::One);
    cfg.iterations = 500;
    cfg.ead.initial_const = 0.01;
    let mut run = |beta: f64| {
        cfg.ead.beta = beta;
        let r = ead_l1(&net, &x, 0, &cfg).unwrap();
        assert!(r.success);
        r.distance
    };
    let plain = run(0.0);
    let sparse = run(0.01);
    assert!(plain >= sparse, "{plain} < {sparse}");
    assert!(sparse >= 0.25 - 1e-9);
}

#[test]
fn hsj_on_the_binary_example() {
    let (net, x) = three_four();
    let r = hopskipjump(&net, &x, 0, &SecondAttackConfig::for_norm(NormKind::Two)).unwrap();
    assert!(r.success);
    assert!(r.distance >= 0.2 - 1e-9 && r.distance <= 0.22, "{}", r.distance);
}

/// Only exposes labels; `hopskipjump` compiling against it shows that no
/// gradients can be requested.
struct LabelOnly<'a> {
    net: &'a Network64,
    queries: AtomicUsize,
}

impl DecisionModel<f64> for LabelOnly<'_> {
    fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    fn num_classes(&self) -> usize {
        self.net.num_classes()
    }

    fn label(&self, x: &Tensor64) -> Result<usize> {
        self.queries.fetch_add(1, Ordering::Relaxed);
        self.net.label(x)
    }
}

#[test]
fn hsj_uses_labels_only() {
    let (net, x) = three_four();
    let wrapped = LabelOnly { net: &net, queries: AtomicUsize::new(0) };
    let r = hopskipjump(&wrapped, &x, 0, &SecondAttackConfig::for_norm(NormKind::Two)).unwrap();
    assert!(r.success);
    assert!(wrapped.queries.load(Ordering::Relaxed) > 100);
}

#[test]
fn attacks_are_deterministic() {
    let net = Network64::random_relu(&[5, 12, 3], 2).unwrap();
    let x = Tensor64::from_vec(vec![0.3, 0.6, 0.5, 0.2, 0.8]);
    let y = net.forward(&x).unwrap().label;
    for kind in [
        SecondAttackKind::HopSkipJump,
        SecondAttackKind::CarliniWagnerL2,
        SecondAttackKind::EadL1,
        SecondAttackKind::DeepFoolL2,
    ] {
        let mut cfg = SecondAttackConfig::new(kind, 20).with_seed(5);
        cfg.hsj.norm = NormKind::Two;
        let p = cfg.native_norm();
        let a = second_attack(&net, &x, y, p, &cfg).unwrap();
        let b = second_attack(&net, &x, y, p, &cfg).unwrap();
        assert_eq!((a.success, a.distance.to_bits(), &a.x_adv), (b.success, b.distance.to_bits(), &b.x_adv));
    }
}

#[test]
fn mismatched_second_attack_is_rejected() {
    let (net, x) = three_four();
    let cfg = SecondAttackConfig::for_norm(NormKind::Two);
    assert!(second_attack(&net, &x, 0, NormKind::One, &cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Halving the step never makes the mean distance worse by more than
    /// one old step, over inputs where both runs succeed.
    #[test]
    fn halving_the_step_refines(seed in 0u64..500) {
        let net = Network64::random_relu(&[3, 10, 2], seed).unwrap();
        let xs: Vec<Tensor64> = (0..6).map(|k| Tensor64::from_vec(vec![0.2 + 0.1 * k as f64, 0.5, 0.7 - 0.08 * k as f64])).collect();
        let run = |eps: f64| -> Vec<Option<f64>> {
            let cfg = AttackConfig::new(NormKind::Infinity, eps, (2.0 / eps) as usize);
            xs.iter().map(|x| {
                let y = net.forward(x).unwrap().label;
                early_stopping_attack(&net, x, y, &cfg).unwrap().found_distance()
            }).collect()
        };
        let pairs: Vec<(f64, f64)> = run(0.02).into_iter().zip(run(0.01)).filter_map(|(a, b)| Some((a?, b?))).collect();
        if !pairs.is_empty() {
            let n = pairs.len() as f64;
            let coarse = pairs.iter().map(|p| p.0).sum::<f64>() / n;
            let fine = pairs.iter().map(|p| p.1).sum::<f64>() / n;
            prop_assert!(fine <= coarse + 0.02, "{} > {} + 0.02", fine, coarse);
        }
    }

    #[test]
    fn linf_distance_is_steps_times_step_while_unclipped(seed in 0u64..500, x0 in 0.35f64..0.65, x1 in 0.35f64..0.65) {
        let net = Network64::random_relu(&[2, 8, 2], seed).unwrap();
        let x = Tensor64::from_vec(vec![x0, x1]);
        let y = net.forward(&x).unwrap().label;
        let eps = 0.003;
        let r = early_stopping_attack(&net, &x, y, &AttackConfig::new(NormKind::Infinity, eps, 2000)).unwrap();
        let slack = x0.min(1.0 - x0).min(x1).min(1.0 - x1);
        if r.success && r.distance < slack {
            prop_assert!((r.distance - r.iterations_used as f64 * eps).abs() < 1e-9);
        }
    }
}
