//! Ground truth for tests: exact minimal distances of affine classifiers and
//! exhaustive grid search in two dimensions.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{lp_distance, NormKind};
use crate::nn::{DecisionModel, Layer, Network, Prediction};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// `logits = W x + b`
#[derive(Debug, Clone, PartialEq)]
pub struct AffineClassifier<T> {
    pub weights: Vec<Vec<T>>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineDistance<T> {
    /// `T::infinity()` when every other class has the same weight row.
    pub distance: T,
    pub nearest_class: Option<usize>,
    pub predicted_class: usize,
}

impl<T: Scalar> AffineClassifier<T> {
    pub fn new(weights: Vec<Vec<T>>, bias: Vec<T>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::domain("affine classifier needs at least 2 classes"));
        }
        if bias.len() != weights.len() {
            return Err(Error::Shape {
                expected: weights.len(),
                actual: bias.len(),
            });
        }
        let d = weights[0].len();
        if let Some(r) = weights.iter().find(|r| r.len() != d) {
            return Err(Error::Shape {
                expected: d,
                actual: r.len(),
            });
        }
        Ok(Self { weights, bias })
    }

    pub fn num_classes(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].len()
    }

    pub fn to_network(&self) -> Result<Network<T>> {
        Network::new(
            vec![Layer::dense(self.weights.clone(), self.bias.clone())?],
            self.num_classes(),
        )
    }

    pub fn predict(&self, x: &Tensor<T>) -> Prediction<T> {
        Prediction::from_logits(
            self.weights
                .iter()
                .zip(&self.bias)
                .map(|(row, &b)| row.iter().zip(x.iter()).map(|(&w, &v)| w * v).sum::<T>() + b)
                .collect(),
        )
    }

    fn row_difference(&self, c: usize, j: usize) -> Vec<T> {
        self.weights[c]
            .iter()
            .zip(&self.weights[j])
            .map(|(&a, &b)| a - b)
            .collect()
    }

    /// Perturbation that reaches the nearest boundary in norm `p`, ignoring
    /// the box. `None` when no boundary exists.
    pub fn minimal_perturbation(&self, x: &Tensor<T>, p: NormKind) -> Option<Tensor<T>> {
        let found = affine_min_distance(self, x, p).ok()?;
        let j = found.nearest_class?;
        let w = self.row_difference(found.predicted_class, j);
        let r = found.distance;
        let delta: Vec<T> = match p {
            NormKind::Two => {
                let n = NormKind::Two.norm(&w);
                w.iter().map(|&v| -r * v / n).collect()
            }
            NormKind::Infinity => w
                .iter()
                .map(|&v| if v == T::zero() { T::zero() } else { -r * v.signum() })
                .collect(),
            NormKind::One => {
                let (k, _) = w
                    .iter()
                    .enumerate()
                    .fold((0, T::zero()), |b, (i, &v)| if v.abs() > b.1 { (i, v.abs()) } else { b });
                let mut d = vec![T::zero(); w.len()];
                d[k] = -r * w[k].signum();
                d
            }
        };
        Some(x.with_data(delta))
    }
}

/// Exact minimal Lp distance to another class for an affine classifier:
/// `min_j (z_c − z_j) / ‖w_c − w_j‖_q` with `q` the dual norm.
pub fn affine_min_distance<T: Scalar>(
    clf: &AffineClassifier<T>,
    x: &Tensor<T>,
    p: NormKind,
) -> Result<AffineDistance<T>> {
    if x.len() != clf.input_dim() {
        return Err(Error::Shape {
            expected: clf.input_dim(),
            actual: x.len(),
        });
    }
    let pred = clf.predict(x);
    let c = pred.label;
    let q = p.dual();
    let mut best = AffineDistance {
        distance: T::infinity(),
        nearest_class: None,
        predicted_class: c,
    };
    for j in (0..clf.num_classes()).filter(|&j| j != c) {
        let wn = q.norm(&clf.row_difference(c, j));
        if wn == T::zero() {
            continue;
        }
        let d = (pred.logits[c] - pred.logits[j]) / wn;
        if d < best.distance {
            best.distance = d;
            best.nearest_class = Some(j);
        }
    }
    Ok(best)
}

/// Smallest Lp distance from `x` to a grid point (clipped to the box) whose
/// label differs from the model's label at `x`. The grid has spacing
/// `grid_step`, is anchored at `x`, and covers the square of half-width
/// `search_radius`. `None` if no such point lies within the radius.
pub fn brute_force_min_distance<T: Scalar, M: DecisionModel<T> + ?Sized>(
    model: &M,
    x: &Tensor<T>,
    p: NormKind,
    grid_step: T,
    search_radius: T,
) -> Result<Option<T>> {
    if x.len() != 2 || model.input_dim() != 2 {
        return Err(Error::domain(format!(
            "brute force search is two-dimensional, got input width {}",
            x.len()
        )));
    }
    if !(grid_step > T::zero()) || !(search_radius > T::zero()) {
        return Err(Error::domain("grid_step and search_radius must be positive"));
    }
    let n = (search_radius / grid_step).floor().to_usize().unwrap_or(usize::MAX);
    let side = n.saturating_mul(2).saturating_add(1);
    if side.saturating_mul(side) > 10_000_000 {
        return Err(Error::domain(format!("grid of {side}x{side} points exceeds 10^7")));
    }
    let own = model.label(x)?;
    let n = n as i64;
    let best = (-n..=n)
        .into_par_iter()
        .map(|i| -> Result<Option<T>> {
            let mut row_best: Option<T> = None;
            for j in -n..=n {
                let pt = x.with_data(vec![
                    clamp01(x[0] + T::from_i64(i).unwrap() * grid_step),
                    clamp01(x[1] + T::from_i64(j).unwrap() * grid_step),
                ]);
                let d = lp_distance(x, &pt, p)?;
                if d > search_radius || row_best.is_some_and(|b| d >= b) {
                    continue;
                }
                if model.label(&pt)? != own {
                    row_best = Some(d);
                }
            }
            Ok(row_best)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<T>, d| Some(acc.map_or(d, |a| a.min(d))));
    Ok(best)
}

fn clamp01<T: Scalar>(v: T) -> T {
    v.max(T::zero()).min(T::one())
}
