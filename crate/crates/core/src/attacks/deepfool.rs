use std::time::Instant;

use super::{check_inputs, AttackResult};
use crate::error::Result;
use crate::geometry::{clip_to_box, NormKind};
use crate::nn::{Classifier, Objective};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// DeepFool in L2: jump to the nearest linearized boundary until the label
/// changes. The accumulated perturbation is scaled by `1 + overshoot`.
pub fn deepfool_l2<T: Scalar, M: Classifier<T>>(
    model: &M,
    x: &Tensor<T>,
    y: usize,
    iterations: usize,
    overshoot: T,
) -> Result<AttackResult<T>> {
    let started = Instant::now();
    check_inputs(model, x, y)?;
    if model.label(x)? != y {
        return AttackResult::verified(model, x, y, x.clone(), NormKind::Two, 0, started);
    }
    // lands strictly past a linear boundary instead of on it
    let nudge = T::one() + T::epsilon().sqrt();
    let scale = T::one() + overshoot;
    let mut total = Tensor::zeros(x.shape().to_vec());
    let mut current = x.clone();
    for it in 1..=iterations {
        let pred = model.forward(&current)?;
        let mut best: Option<(T, Tensor<T>, T)> = None;
        for l in (0..model.num_classes()).filter(|&l| l != y) {
            let w = model.input_gradient(&current, Objective::LogitDifference { c: l, j: y })?;
            let wn = NormKind::Two.norm(w.as_slice());
            if !(wn > T::zero()) {
                continue;
            }
            let f = (pred.logits[l] - pred.logits[y]).abs();
            let dist = f / wn;
            if best.as_ref().is_none_or(|(d, _, _)| dist < *d) {
                best = Some((dist, w, f / (wn * wn)));
            }
        }
        let Some((_, w, coef)) = best else {
            return Ok(AttackResult::failure(x, it, started));
        };
        total = total.axpy(coef * nudge, &w)?;
        current = clip_to_box(&x.axpy(scale, &total)?);
        if model.label(&current)? != y {
            return AttackResult::verified(model, x, y, current, NormKind::Two, it, started);
        }
    }
    AttackResult::verified(model, x, y, current, NormKind::Two, iterations, started)
}
