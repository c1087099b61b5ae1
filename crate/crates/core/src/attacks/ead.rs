use std::time::Instant;

use super::{check_inputs, AttackResult, SecondAttackConfig};
use crate::error::Result;
use crate::geometry::NormKind;
use crate::nn::{Classifier, Objective};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Elastic-net attack: ISTA on `c·hinge + β‖δ‖₁ + ‖δ‖₂²` with box
/// projection, binary search on `c`, and the smallest-L1 adversarial
/// iterate as the answer.
pub fn ead_l1<T: Scalar, M: Classifier<T>>(
    model: &M,
    x: &Tensor<T>,
    y: usize,
    cfg: &SecondAttackConfig<T>,
) -> Result<AttackResult<T>> {
    let started = Instant::now();
    check_inputs(model, x, y)?;
    let params = cfg.ead;
    if model.label(x)? != y {
        return AttackResult::verified(model, x, y, x.clone(), NormKind::One, 0, started);
    }

    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let mut best: Option<(T, Tensor<T>)> = None;
    let mut iterations = 0;
    let (mut lo, mut hi) = (T::zero(), None::<T>);
    let mut c = params.initial_const;

    for _ in 0..params.binary_search_steps {
        let mut current = x.clone();
        let mut succeeded = false;
        for it in 0..=cfg.iterations {
            let pred = model.forward(&current)?;
            let (other, z_other) = pred.runner_up(y);
            let margin = pred.logits[y] - z_other;
            if pred.label != y && margin <= -params.kappa {
                succeeded = true;
                let l1 = NormKind::One.norm(current.sub(x)?.as_slice());
                if best.as_ref().is_none_or(|(d, _)| l1 < *d) {
                    best = Some((l1, current.clone()));
                }
            }
            if it == cfg.iterations {
                break;
            }
            iterations += 1;
            let mut grad: Vec<T> = current
                .iter()
                .zip(x.iter())
                .map(|(&a, &b)| two * (a - b))
                .collect();
            if margin > -params.kappa {
                let g = model.input_gradient(&current, Objective::LogitDifference { c: y, j: other })?;
                for (gi, &gv) in grad.iter_mut().zip(g.iter()) {
                    *gi += c * gv;
                }
            }
            for ((v, &g), &orig) in current.as_mut_slice().iter_mut().zip(&grad).zip(x.iter()) {
                let delta = *v - params.learning_rate * g - orig;
                let shrunk = soft_threshold(delta, params.beta);
                *v = (orig + shrunk).max(T::zero()).min(T::one());
            }
        }
        if succeeded {
            hi = Some(hi.map_or(c, |h| h.min(c)));
        } else {
            lo = lo.max(c);
        }
        c = match hi {
            Some(h) => (lo + h) * half,
            None => c * two,
        };
    }

    match best {
        Some((_, adv)) => AttackResult::verified(model, x, y, adv, NormKind::One, iterations, started),
        None => Ok(AttackResult::failure(x, iterations, started)),
    }
}

/// `sign(v) · max(|v| − t, 0)`
pub(crate) fn soft_threshold<T: Scalar>(v: T, t: T) -> T {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        T::zero()
    }
}
