//! Shared generators for the integration and acceptance tests.
#![allow(dead_code)]

use std::path::PathBuf;

use advbound::io::{load_dataset, load_model};
use advbound::oracle::{affine_min_distance, AffineClassifier};
use advbound::{Classifier, Dataset64, NormKind, Network64, Objective, Tensor64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Weibull};

pub struct AffineCase {
    pub clf: AffineClassifier<f64>,
    pub net: Network64,
    pub x: Tensor64,
    pub label: usize,
    /// Closed-form distances for L1, L2, L∞.
    pub oracle: [f64; 3],
}

impl AffineCase {
    pub fn oracle(&self, p: NormKind) -> f64 {
        match p {
            NormKind::One => self.oracle[0],
            NormKind::Two => self.oracle[1],
            NormKind::Infinity => self.oracle[2],
        }
    }
}

/// Random affine classifiers (2..=20 inputs, 2..=5 classes) at interior
/// points whose minimal perturbation stays inside the box in every norm,
/// so the closed form is the true minimal distance.
pub fn affine_suite(count: usize, seed: u64) -> Vec<AffineCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let d = rng.random_range(2..=20);
        let k = rng.random_range(2..=5);
        let weights: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..d).map(|_| normal.sample(&mut rng)).collect())
            .collect();
        let bias: Vec<f64> = (0..k).map(|_| 0.3 * normal.sample(&mut rng)).collect();
        let x = Tensor64::from_vec((0..d).map(|_| rng.random_range(0.3..0.7)).collect());
        let clf = AffineClassifier::new(weights, bias).unwrap();
        let label = clf.predict(&x).label;
        let mut oracle = [0.0; 3];
        let mut ok = true;
        for (slot, p) in [NormKind::One, NormKind::Two, NormKind::Infinity].into_iter().enumerate() {
            let dist = affine_min_distance(&clf, &x, p).unwrap().distance;
            let inside = clf
                .minimal_perturbation(&x, p)
                .is_some_and(|v| x.iter().zip(v.iter()).all(|(a, b)| (0.0..=1.0).contains(&(a + 1.01 * b))));
            ok &= dist.is_finite() && dist > 1e-3 && inside;
            oracle[slot] = dist;
        }
        if ok && oracle[2] < 0.12 {
            let net = clf.to_network().unwrap();
            out.push(AffineCase { clf, net, x, label, oracle });
        }
    }
    out
}

pub fn central_difference(net: &Network64, x: &Tensor64, obj: Objective, h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut plus = x.clone();
            let mut minus = x.clone();
            plus[i] += h;
            minus[i] -= h;
            (net.objective_value(&plus, obj).unwrap() - net.objective_value(&minus, obj).unwrap()) / (2.0 * h)
        })
        .collect()
}

/// Largest relative error between the analytic gradient and central
/// differences; relative to max(|a|, |fd|, 1e-3).
pub fn gradient_error(net: &Network64, x: &Tensor64, obj: Objective) -> f64 {
    let g = net.input_gradient(x, obj).unwrap();
    let fd = central_difference(net, x, obj, 1e-5);
    g.iter()
        .zip(&fd)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-3))
        .fold(0.0, f64::max)
}

/// `location − W` with `W ~ Weibull(scale, shape)`.
pub fn reverse_weibull_samples(location: f64, shape: f64, scale: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = Weibull::new(scale, shape).unwrap();
    (0..n).map(|_| location - w.sample(&mut rng)).collect()
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// `<stem>.json` and `<stem>.csv` from the fixture directory.
pub fn load_fixture(stem: &str) -> (Network64, Dataset64) {
    let net = load_model(fixture(&format!("{stem}.json"))).unwrap();
    let data = load_dataset(fixture(&format!("{stem}.csv"))).unwrap();
    (net, data)
}

/// Rows the model classifies correctly.
pub fn correctly_classified(net: &Network64, data: &Dataset64) -> Dataset64 {
    let keep: Vec<usize> = (0..data.len())
        .filter(|&i| net.forward(&data.inputs[i]).unwrap().label == data.labels[i])
        .collect();
    Dataset64::new(
        keep.iter().map(|&i| data.inputs[i].clone()).collect(),
        keep.iter().map(|&i| data.labels[i]).collect(),
    )
    .unwrap()
}
