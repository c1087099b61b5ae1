//! CLEVER lower-bound estimates.
//!
//! For the predicted class `c` and every other class `j`, gradient norms of
//! `f_c − f_j` (measured in the dual norm) are sampled uniformly in the Lp
//! ball around `x`. Per-batch maxima are fitted with a reverse Weibull
//! whose right endpoint estimates the local cross-Lipschitz constant
//! `L_j`; the score is `min_j min(g_j(x) / L_j, radius)`.
//!
//! The estimate is statistical and can exceed the true minimal distance.

mod simplex;
mod weibull;

use std::fmt;
use std::str::FromStr;

pub use weibull::{reverse_weibull_mle, WeibullFit};

use crate::error::{Error, Result};
use crate::geometry::{sample_in_ball, NormKind};
use crate::nn::{Classifier, Objective};
use crate::rng::{class_seed, mix};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Below this the landscape toward `j` is treated as flat.
const FLAT_LIPSCHITZ: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CleverConfig<T> {
    pub radius: T,
    /// Attack norm; gradients are measured in its dual.
    pub norm: NormKind,
    pub nb_batches: usize,
    pub samples_per_batch: usize,
    pub seed: u64,
}

impl<T: Scalar> CleverConfig<T> {
    pub fn new(radius: T, norm: NormKind, preset: CleverPreset) -> Self {
        let (samples_per_batch, nb_batches) = preset.sizes();
        Self {
            radius,
            norm,
            nb_batches,
            samples_per_batch,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > T::zero()) || !self.radius.is_finite() {
            return Err(Error::config(format!("CLEVER radius must be > 0, got {}", self.radius)));
        }
        if self.nb_batches < 2 {
            return Err(Error::config("CLEVER needs at least 2 batches"));
        }
        if self.samples_per_batch == 0 {
            return Err(Error::config("CLEVER needs at least 1 sample per batch"));
        }
        Ok(())
    }
}

/// Samples-per-batch × batch-count settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CleverPreset {
    S5x5,
    S20x10,
    #[default]
    S100x50,
    S1024x500,
}

impl CleverPreset {
    pub const ALL: [CleverPreset; 4] = [
        CleverPreset::S5x5,
        CleverPreset::S20x10,
        CleverPreset::S100x50,
        CleverPreset::S1024x500,
    ];

    /// `(samples_per_batch, nb_batches)`
    pub fn sizes(self) -> (usize, usize) {
        match self {
            CleverPreset::S5x5 => (5, 5),
            CleverPreset::S20x10 => (20, 10),
            CleverPreset::S100x50 => (100, 50),
            CleverPreset::S1024x500 => (1024, 500),
        }
    }
}

impl fmt::Display for CleverPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (s, b) = self.sizes();
        write!(f, "{s}x{b}")
    }
}

impl FromStr for CleverPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CleverPreset::ALL
            .into_iter()
            .find(|p| p.to_string() == s.trim().replace('/', "x"))
            .ok_or_else(|| {
                Error::config(format!("unknown CLEVER preset {s:?} (5x5, 20x10, 100x50, 1024x500)"))
            })
    }
}

/// Bound against one target class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassBound<T> {
    pub class: usize,
    /// `f_c(x) − f_j(x)`, nonnegative.
    pub margin: T,
    pub lipschitz: T,
    pub score: T,
    pub fit: WeibullFit<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleverScore<T> {
    pub predicted_class: usize,
    pub score: T,
    pub per_class: Vec<ClassBound<T>>,
    /// `score == radius`
    pub capped: bool,
}

impl<T: Scalar> CleverScore<T> {
    pub fn per_class_scores(&self) -> Vec<T> {
        self.per_class.iter().map(|b| b.score).collect()
    }

    pub fn lipschitz_estimates(&self) -> Vec<T> {
        self.per_class.iter().map(|b| b.lipschitz).collect()
    }
}

/// Maximum dual-norm gradient of `f_c − f_j` in each of `nb_batches`
/// batches of points sampled in the ball. `c` is the predicted class.
pub fn batch_gradient_maxima<T: Scalar, M: Classifier<T>>(
    model: &M,
    x: &Tensor<T>,
    j: usize,
    cfg: &CleverConfig<T>,
) -> Result<Vec<T>> {
    cfg.validate()?;
    let c = model.forward(x)?.label;
    if j >= model.num_classes() {
        return Err(Error::Index {
            index: j,
            num_classes: model.num_classes(),
        });
    }
    if j == c {
        return Err(Error::domain(format!("target class {j} is the predicted class")));
    }
    let q = cfg.norm.dual();
    let objective = Objective::LogitDifference { c, j };
    (0..cfg.nb_batches)
        .map(|b| {
            let seed = mix(cfg.seed ^ (b as u64).wrapping_mul(0x9E37_79B9));
            let points = sample_in_ball(x, cfg.radius, cfg.norm, cfg.samples_per_batch, seed)?;
            points.iter().try_fold(T::zero(), |best, pt| {
                let g = model.input_gradient(pt, objective)?;
                Ok(best.max(q.norm(g.as_slice())))
            })
        })
        .collect()
}

/// Untargeted CLEVER score. `cfg.seed` is the per-image seed; each target
/// class derives its own stream from it.
pub fn clever_score<T: Scalar, M: Classifier<T>>(
    model: &M,
    x: &Tensor<T>,
    cfg: &CleverConfig<T>,
) -> Result<CleverScore<T>> {
    cfg.validate()?;
    let pred = model.forward(x)?;
    let c = pred.label;
    let mut per_class = Vec::with_capacity(model.num_classes().saturating_sub(1));
    for j in (0..model.num_classes()).filter(|&j| j != c) {
        let class_cfg = CleverConfig {
            seed: class_seed(cfg.seed, 0, j),
            ..*cfg
        };
        let maxima = batch_gradient_maxima(model, x, j, &class_cfg)?;
        let fit = reverse_weibull_mle(&maxima)?;
        let margin = (pred.logits[c] - pred.logits[j]).max(T::zero());
        let lipschitz = fit.location;
        let score = if lipschitz <= T::lit(FLAT_LIPSCHITZ) {
            cfg.radius
        } else {
            (margin / lipschitz).min(cfg.radius)
        };
        per_class.push(ClassBound {
            class: j,
            margin,
            lipschitz,
            score,
            fit,
        });
    }
    let score = per_class
        .iter()
        .map(|b| b.score)
        .fold(cfg.radius, T::min)
        .max(T::zero());
    Ok(CleverScore {
        predicted_class: c,
        score,
        capped: score == cfg.radius,
        per_class,
    })
}
