//! HopSkipJump: a decision-based attack that only ever asks for labels.

use std::time::Instant;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::{check_inputs, AttackResult, SecondAttackConfig};
use crate::error::{Error, Result};
use crate::geometry::{clip_in_place, lp_distance, NormKind};
use crate::nn::DecisionModel;
use crate::rng::{rng_from_seed, Rng};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

struct Oracle<'a, T: Scalar, M: ?Sized> {
    model: &'a M,
    y: usize,
    _scalar: std::marker::PhantomData<T>,
}

impl<T: Scalar, M: DecisionModel<T> + ?Sized> Oracle<'_, T, M> {
    fn adversarial(&self, pt: &Tensor<T>) -> Result<bool> {
        Ok(self.model.label(pt)? != self.y)
    }
}

/// Point between `lo_pt` (x side) and the boundary at parameter `a`.
/// L2: convex blend with weight `a` on `far`. L∞: `far` clipped to the
/// L∞ ball of radius `a` around `x`.
fn project<T: Scalar>(x: &Tensor<T>, far: &Tensor<T>, a: T, norm: NormKind) -> Tensor<T> {
    match norm {
        NormKind::Infinity => x.with_data(
            x.iter()
                .zip(far.iter())
                .map(|(&o, &f)| f.max(o - a).min(o + a))
                .collect(),
        ),
        _ => x.with_data(
            x.iter()
                .zip(far.iter())
                .map(|(&o, &f)| o + a * (f - o))
                .collect(),
        ),
    }
}

/// Bisects the segment (L2) or the L∞ radius between the correctly
/// classified `x` and the adversarial `far` until the bracket is at most
/// `theta · min(dist, 1)` wide in the attack norm. Returns the adversarial
/// end of the bracket.
pub fn boundary_bisection<T: Scalar, M: DecisionModel<T> + ?Sized>(
    model: &M,
    x: &Tensor<T>,
    y: usize,
    far: &Tensor<T>,
    norm: NormKind,
    theta: T,
) -> Result<Tensor<T>> {
    if norm == NormKind::One {
        return Err(Error::config("boundary bisection supports L2 and L∞"));
    }
    let oracle = Oracle {
        model,
        y,
        _scalar: std::marker::PhantomData,
    };
    if !oracle.adversarial(far)? {
        return Err(Error::domain("bisection needs an adversarial end point"));
    }
    bisect(&oracle, x, far, norm, theta)
}

fn bisect<T: Scalar, M: DecisionModel<T> + ?Sized>(
    oracle: &Oracle<'_, T, M>,
    x: &Tensor<T>,
    far: &Tensor<T>,
    norm: NormKind,
    theta: T,
) -> Result<Tensor<T>> {
    let dist = lp_distance(x, far, norm)?;
    let tol = theta * dist.min(T::one());
    // width of the bracket in distance units per unit of the parameter
    let (mut lo, mut hi, unit) = match norm {
        NormKind::Infinity => (T::zero(), dist, T::one()),
        _ => (T::zero(), T::one(), dist),
    };
    let half = T::lit(0.5);
    while (hi - lo) * unit > tol {
        let mid = (lo + hi) * half;
        if mid <= lo || mid >= hi {
            break;
        }
        if oracle.adversarial(&project(x, far, mid, norm))? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(project(x, far, hi, norm))
}

fn initialize<T: Scalar, M: DecisionModel<T> + ?Sized>(
    oracle: &Oracle<'_, T, M>,
    x: &Tensor<T>,
    trials: usize,
    rng: &mut Rng,
) -> Result<Option<Tensor<T>>> {
    for _ in 0..trials {
        let noise = x.with_data((0..x.len()).map(|_| T::lit(rng.random::<f64>())).collect());
        if oracle.adversarial(&noise)? {
            // shortest blend toward the noise that is still adversarial
            let (mut lo, mut hi) = (T::zero(), T::one());
            while hi - lo > T::lit(1e-3) {
                let mid = (lo + hi) * T::lit(0.5);
                if oracle.adversarial(&project(x, &noise, mid, NormKind::Two))? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(Some(project(x, &noise, hi, NormKind::Two)));
        }
    }
    Ok(None)
}

/// Monte-Carlo estimate of the boundary normal at `at`: mean of unit
/// probes weighted by whether they land on the adversarial side.
fn estimate_direction<T: Scalar, M: DecisionModel<T> + ?Sized>(
    oracle: &Oracle<'_, T, M>,
    at: &Tensor<T>,
    evals: usize,
    delta: T,
    norm: NormKind,
    rng: &mut Rng,
) -> Result<Vec<T>> {
    let d = at.len();
    let mut probes = Vec::with_capacity(evals);
    let mut signs = Vec::with_capacity(evals);
    for _ in 0..evals {
        let mut u: Vec<f64> = match norm {
            NormKind::Infinity => (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect(),
            _ => (0..d).map(|_| StandardNormal.sample(rng)).collect(),
        };
        let n = u.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        u.iter_mut().for_each(|v| *v /= n);
        let mut pt = at.with_data(at.iter().zip(&u).map(|(&a, &v)| a + delta * T::lit(v)).collect());
        clip_in_place(&mut pt);
        let probe: Vec<T> = pt.iter().zip(at.iter()).map(|(&p, &a)| (p - a) / delta).collect();
        signs.push(if oracle.adversarial(&pt)? { T::one() } else { -T::one() });
        probes.push(probe);
    }
    let n = T::from_usize_lossy(evals);
    let mean_sign = signs.iter().copied().sum::<T>() / n;
    let centered: Vec<T> = if mean_sign.abs() == T::one() {
        signs
    } else {
        signs.iter().map(|&s| s - mean_sign).collect()
    };
    let mut grad = vec![T::zero(); d];
    for (probe, &s) in probes.iter().zip(&centered) {
        for (g, &p) in grad.iter_mut().zip(probe) {
            *g += s * p;
        }
    }
    let norm2 = NormKind::Two.norm(&grad);
    if norm2 > T::zero() {
        grad.iter_mut().for_each(|g| *g /= norm2);
    }
    Ok(grad)
}

/// HopSkipJump in L2 or L∞ (`cfg.hsj.norm`).
pub fn hopskipjump<T: Scalar, M: DecisionModel<T> + ?Sized>(
    model: &M,
    x: &Tensor<T>,
    y: usize,
    cfg: &SecondAttackConfig<T>,
) -> Result<AttackResult<T>> {
    let started = Instant::now();
    check_inputs(model, x, y)?;
    let params = cfg.hsj;
    let norm = params.norm;
    if norm == NormKind::One {
        return Err(Error::config("hopskipjump supports L2 and L∞"));
    }
    let oracle = Oracle {
        model,
        y,
        _scalar: std::marker::PhantomData,
    };
    if oracle.adversarial(x)? {
        return AttackResult::verified(model, x, y, x.clone(), norm, 0, started);
    }
    let d = x.len();
    let dim = T::from_usize_lossy(d);
    let theta = params.theta.unwrap_or_else(|| T::lit(0.01) / dim);
    let mut rng = rng_from_seed(cfg.seed);

    let Some(start) = initialize(&oracle, x, params.init_trials, &mut rng)? else {
        return Ok(AttackResult::failure(x, 0, started));
    };
    let mut current = bisect(&oracle, x, &start, norm, theta)?;
    let mut dist = lp_distance(x, &current, norm)?;
    let mut best = (dist, current.clone());

    for t in 0..cfg.iterations {
        let delta = if t == 0 {
            T::lit(0.1)
        } else {
            match norm {
                NormKind::Infinity => dim * theta * dist,
                _ => dim.sqrt() * theta * dist,
            }
        };
        let evals = ((params.initial_evals as f64) * ((t + 1) as f64).sqrt()) as usize;
        let evals = evals.clamp(1, params.max_evals);
        let grad = estimate_direction(&oracle, &current, evals, delta, norm, &mut rng)?;
        let update: Vec<T> = match norm {
            NormKind::Infinity => grad.iter().map(|g| sign(*g)).collect(),
            _ => grad,
        };

        let mut step = dist / T::from_usize_lossy(t + 1).sqrt();
        let mut moved = None;
        for _ in 0..40 {
            let mut cand =
                current.with_data(current.iter().zip(&update).map(|(&c, &u)| c + step * u).collect());
            clip_in_place(&mut cand);
            if oracle.adversarial(&cand)? {
                moved = Some(cand);
                break;
            }
            step *= T::lit(0.5);
        }
        let Some(cand) = moved else { continue };
        current = bisect(&oracle, x, &cand, norm, theta)?;
        dist = lp_distance(x, &current, norm)?;
        if dist < best.0 {
            best = (dist, current.clone());
        }
    }
    AttackResult::verified(model, x, y, best.1, norm, cfg.iterations, started)
}

fn sign<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        T::one()
    } else if v < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}
