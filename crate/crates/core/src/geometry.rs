//! Lp distances, the [0,1] box, and uniform sampling in Lp balls.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormKind {
    One,
    Two,
    Infinity,
}

impl NormKind {
    pub const ALL: [NormKind; 3] = [NormKind::One, NormKind::Two, NormKind::Infinity];

    /// Hölder conjugate: 1 ↔ ∞, 2 ↔ 2.
    pub fn dual(self) -> NormKind {
        match self {
            NormKind::One => NormKind::Infinity,
            NormKind::Two => NormKind::Two,
            NormKind::Infinity => NormKind::One,
        }
    }

    pub fn norm<T: Scalar>(self, v: &[T]) -> T {
        match self {
            NormKind::One => v.iter().map(|x| x.abs()).sum(),
            NormKind::Two => v.iter().map(|&x| x * x).sum::<T>().sqrt(),
            NormKind::Infinity => v.iter().fold(T::zero(), |m, x| m.max(x.abs())),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::One => "1",
            NormKind::Two => "2",
            NormKind::Infinity => "inf",
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "l1" | "one" => Ok(NormKind::One),
            "2" | "l2" | "two" => Ok(NormKind::Two),
            "inf" | "linf" | "infinity" => Ok(NormKind::Infinity),
            other => Err(Error::config(format!("unknown norm {other:?} (use 1, 2 or inf)"))),
        }
    }
}

pub fn dual_exponent(p: NormKind) -> NormKind {
    p.dual()
}

pub fn lp_distance<T: Scalar>(x: &Tensor<T>, x_adv: &Tensor<T>, p: NormKind) -> Result<T> {
    if x.shape() != x_adv.shape() {
        return Err(Error::Shape {
            expected: x.len(),
            actual: x_adv.len(),
        });
    }
    let diff: Vec<T> = x.iter().zip(x_adv.iter()).map(|(&a, &b)| a - b).collect();
    Ok(p.norm(&diff))
}

pub fn clip_to_box<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| v.max(T::zero()).min(T::one()))
}

pub(crate) fn clip_in_place<T: Scalar>(x: &mut Tensor<T>) {
    for v in x.as_mut_slice() {
        *v = v.max(T::zero()).min(T::one());
    }
}

/// `count` points drawn uniformly from the closed Lp ball of `radius`
/// around `center`. Points are not clipped to the box.
pub fn sample_in_ball<T: Scalar>(
    center: &Tensor<T>,
    radius: T,
    p: NormKind,
    count: usize,
    seed: u64,
) -> Result<Vec<Tensor<T>>> {
    if !(radius > T::zero()) {
        return Err(Error::domain(format!("sampling radius must be > 0, got {radius}")));
    }
    let mut rng = rng_from_seed(seed);
    let d = center.len();
    let r = radius.as_f64();
    let mut out = Vec::with_capacity(count);
    let mut offset = vec![0.0f64; d];
    for _ in 0..count {
        unit_ball_point(&mut rng, p, &mut offset);
        let data = center
            .iter()
            .zip(&offset)
            .map(|(&c, &o)| c + T::lit(o * r))
            .collect();
        out.push(center.with_data(data));
    }
    // rounding in the final add can push a point a hair outside
    for pt in &mut out {
        let dist = lp_distance(center, pt, p)?;
        if dist > radius {
            let shrink = radius / dist;
            for (v, &c) in pt.as_mut_slice().iter_mut().zip(center.iter()) {
                *v = c + (*v - c) * shrink * (T::one() - T::epsilon());
            }
        }
    }
    Ok(out)
}

/// Uniform point in the unit ball, written into `buf`.
fn unit_ball_point(rng: &mut crate::rng::Rng, p: NormKind, buf: &mut [f64]) {
    let d = buf.len() as f64;
    match p {
        NormKind::Infinity => {
            for v in buf.iter_mut() {
                *v = rng.random_range(-1.0..=1.0);
            }
        }
        NormKind::Two => {
            let mut sq;
            loop {
                sq = 0.0;
                for v in buf.iter_mut() {
                    *v = StandardNormal.sample(rng);
                    sq += *v * *v;
                }
                if sq > 0.0 {
                    break;
                }
            }
            let u: f64 = rng.random();
            let scale = u.powf(1.0 / d) / sq.sqrt();
            buf.iter_mut().for_each(|v| *v *= scale);
        }
        NormKind::One => {
            // normalized exponentials are uniform on the simplex; random
            // signs spread them over the L1 sphere
            let mut total;
            loop {
                total = 0.0;
                for v in buf.iter_mut() {
                    *v = Exp1.sample(rng);
                    total += *v;
                }
                if total > 0.0 {
                    break;
                }
            }
            let u: f64 = rng.random();
            let scale = u.powf(1.0 / d) / total;
            for v in buf.iter_mut() {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                *v *= sign * scale;
            }
        }
    }
}
