use std::time::Instant;

use super::{check_inputs, AttackResult, SecondAttackConfig};
use crate::error::Result;
use crate::geometry::NormKind;
use crate::nn::{Classifier, Objective};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Adam moments for one optimization run.
pub(crate) struct Adam<T> {
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
    lr: T,
}

impl<T: Scalar> Adam<T> {
    pub(crate) fn new(dim: usize, lr: T) -> Self {
        Self {
            m: vec![T::zero(); dim],
            v: vec![T::zero(); dim],
            t: 0,
            lr,
        }
    }

    pub(crate) fn step(&mut self, params: &mut [T], grad: &[T]) {
        let (b1, b2, eps) = (T::lit(0.9), T::lit(0.999), T::lit(1e-8));
        self.t += 1;
        let c1 = T::one() - b1.powi(self.t);
        let c2 = T::one() - b2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = b1 * self.m[i] + (T::one() - b1) * grad[i];
            self.v[i] = b2 * self.v[i] + (T::one() - b2) * grad[i] * grad[i];
            let mhat = self.m[i] / c1;
            let vhat = self.v[i] / c2;
            params[i] -= self.lr * mhat / (vhat.sqrt() + eps);
        }
    }
}

/// Carlini–Wagner L2 with the tanh change of variables and a binary search
/// over the trade-off constant. Returns the closest adversarial iterate
/// seen over the whole search.
pub fn carlini_wagner_l2<T: Scalar, M: Classifier<T>>(
    model: &M,
    x: &Tensor<T>,
    y: usize,
    cfg: &SecondAttackConfig<T>,
) -> Result<AttackResult<T>> {
    let started = Instant::now();
    check_inputs(model, x, y)?;
    let params = cfg.cw;
    if model.label(x)? != y {
        return AttackResult::verified(model, x, y, x.clone(), NormKind::Two, 0, started);
    }

    let shrink = T::one() - T::lit(1e-6);
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let w0: Vec<T> = x.iter().map(|&v| ((two * v - T::one()) * shrink).atanh()).collect();

    let mut best: Option<(T, Tensor<T>)> = None;
    let mut iterations = 0;
    let (mut lo, mut hi) = (T::zero(), None::<T>);
    let mut c = params.initial_const;

    for _ in 0..params.binary_search_steps {
        let mut w = w0.clone();
        let mut adam = Adam::new(w.len(), params.learning_rate);
        let mut succeeded = false;
        for it in 0..=cfg.iterations {
            let tanh: Vec<T> = w.iter().map(|v| v.tanh()).collect();
            let candidate = x.with_data(tanh.iter().map(|&t| (t + T::one()) * half).collect());
            let pred = model.forward(&candidate)?;
            let (other, z_other) = pred.runner_up(y);
            let margin = pred.logits[y] - z_other;
            let dist2: T = candidate
                .iter()
                .zip(x.iter())
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum();
            if pred.label != y && margin <= -params.kappa {
                succeeded = true;
                if best.as_ref().is_none_or(|(d, _)| dist2 < *d) {
                    best = Some((dist2, candidate.clone()));
                }
            }
            if it == cfg.iterations {
                break;
            }
            iterations += 1;
            let mut grad: Vec<T> = candidate
                .iter()
                .zip(x.iter())
                .map(|(&a, &b)| two * (a - b))
                .collect();
            if margin > -params.kappa {
                let g = model.input_gradient(&candidate, Objective::LogitDifference { c: y, j: other })?;
                for (gi, &gv) in grad.iter_mut().zip(g.iter()) {
                    *gi += c * gv;
                }
            }
            for (gi, &t) in grad.iter_mut().zip(&tanh) {
                *gi *= (T::one() - t * t) * half;
            }
            adam.step(&mut w, &grad);
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
        Some((_, adv)) => AttackResult::verified(model, x, y, adv, NormKind::Two, iterations, started),
        None => Ok(AttackResult::failure(x, iterations, started)),
    }
}
