use std::time::Instant;

use super::{AttackConfig, AttackResult, L1Direction};
use crate::error::{Error, Result};
use crate::geometry::{clip_in_place, NormKind};
use crate::nn::{Classifier, Objective};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// One ascent step of size `eps_step` on the cross-entropy loss, clipped to
/// the box. A zero gradient leaves `x` unchanged.
pub fn pgd_single_step<T: Scalar, M: Classifier<T>>(
    model: &M,
    x: &Tensor<T>,
    y: usize,
    eps_step: T,
    p: NormKind,
) -> Result<Tensor<T>> {
    pgd_step(model, x, y, eps_step, p, L1Direction::default())
}

pub fn pgd_step<T: Scalar, M: Classifier<T>>(
    model: &M,
    x: &Tensor<T>,
    y: usize,
    eps_step: T,
    p: NormKind,
    l1_direction: L1Direction,
) -> Result<Tensor<T>> {
    let g = model.input_gradient(x, Objective::CrossEntropy { label: y })?;
    let mut out = x.clone();
    match (p, l1_direction) {
        (NormKind::Infinity, _) => {
            for (v, &gi) in out.as_mut_slice().iter_mut().zip(g.iter()) {
                if gi > T::zero() {
                    *v += eps_step;
                } else if gi < T::zero() {
                    *v -= eps_step;
                }
            }
        }
        (NormKind::Two, _) | (NormKind::One, L1Direction::Normalized) => {
            let norm = p.norm(g.as_slice());
            if norm == T::zero() || !norm.is_finite() {
                return Ok(out);
            }
            let scale = eps_step / norm;
            for (v, &gi) in out.as_mut_slice().iter_mut().zip(g.iter()) {
                *v += scale * gi;
            }
        }
        (NormKind::One, L1Direction::SteepestCoordinate) => {
            let movable = |i: usize, gi: T| {
                (gi > T::zero() && x[i] < T::one()) || (gi < T::zero() && x[i] > T::zero())
            };
            let best = g
                .iter()
                .enumerate()
                .filter(|&(i, &gi)| movable(i, gi))
                .fold(None::<(usize, T)>, |best, (i, &gi)| match best {
                    Some((_, b)) if gi.abs() <= b.abs() => best,
                    _ => Some((i, gi)),
                });
            if let Some((i, gi)) = best {
                out[i] += eps_step * gi.signum();
            }
        }
    }
    clip_in_place(&mut out);
    Ok(out)
}

/// Repeats [`pgd_step`] from `x` and stops at the first iterate whose label
/// differs from `y`. The distance is measured from the original `x`.
///
/// Requires `x` to be classified as `y`; misclassified points are the
/// caller's business.
pub fn early_stopping_attack<T: Scalar, M: Classifier<T>>(
    model: &M,
    x: &Tensor<T>,
    y: usize,
    cfg: &AttackConfig<T>,
) -> Result<AttackResult<T>> {
    let started = Instant::now();
    cfg.validate()?;
    let initial = model.forward(x)?;
    if initial.label != y {
        return Err(Error::Contract(format!(
            "early-stopping attack needs a correctly classified input (predicted {}, true {y})",
            initial.label
        )));
    }
    if !x.in_unit_box() {
        return Err(Error::Contract("input lies outside the [0,1] box".into()));
    }

    let mut current = x.clone();
    for i in 1..=cfg.max_iters {
        let next = pgd_step(model, &current, y, cfg.eps_step, cfg.norm, cfg.l1_direction)?;
        if model.forward(&next)?.label != y {
            return AttackResult::verified(model, x, y, next, cfg.norm, i, started);
        }
        if next == current {
            // fixed point: the remaining iterations would repeat this one
            return budget_exhausted(x, next, cfg, started);
        }
        current = next;
    }
    budget_exhausted(x, current, cfg, started)
}

fn budget_exhausted<T: Scalar>(
    x: &Tensor<T>,
    last: Tensor<T>,
    cfg: &AttackConfig<T>,
    started: Instant,
) -> Result<AttackResult<T>> {
    let distance = crate::geometry::lp_distance(x, &last, cfg.norm)?;
    Ok(AttackResult {
        x_adv: last,
        success: false,
        distance,
        iterations_used: cfg.max_iters,
        wall_time: started.elapsed(),
    })
}

/// Iterative FGSM with early stopping: the L∞ instance of
/// [`early_stopping_attack`].
pub fn fgsm_early_stopping<T: Scalar, M: Classifier<T>>(
    model: &M,
    x: &Tensor<T>,
    y: usize,
    eps_step: T,
    max_iters: usize,
) -> Result<AttackResult<T>> {
    early_stopping_attack(model, x, y, &AttackConfig::new(NormKind::Infinity, eps_step, max_iters))
}
