//! Upper/lower bound ensemble over a dataset.
//!
//! Every correctly classified image is attacked twice (the early-stopping
//! loop and a second attack) and keeps the smaller distance. CLEVER then
//! runs on the same images at the largest distance found, and the records
//! are sorted by distance with their CLEVER scores carried along.

use std::cmp::Ordering;
use std::fmt;
use std::time::{Duration, Instant};

use log::warn;
use rayon::prelude::*;

use crate::attacks::{early_stopping_attack, second_attack, AttackConfig, SecondAttackConfig};
use crate::clever::{clever_score, CleverConfig, CleverPreset};
use crate::error::{Error, Result};
use crate::geometry::NormKind;
use crate::nn::Classifier;
use crate::rng::image_seed;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub inputs: Vec<Tensor<T>>,
    pub labels: Vec<usize>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(inputs: Vec<Tensor<T>>, labels: Vec<usize>) -> Result<Self> {
        if inputs.len() != labels.len() {
            return Err(Error::domain(format!(
                "{} inputs but {} labels",
                inputs.len(),
                labels.len()
            )));
        }
        Ok(Self { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// First `n` rows, or all of them.
    pub fn take(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            inputs: self.inputs[..n].to_vec(),
            labels: self.labels[..n].to_vec(),
        }
    }

    /// Checks widths and label ranges against `model`.
    pub fn check_against<M: Classifier<T> + ?Sized>(&self, model: &M) -> Result<()> {
        for (row, (x, &y)) in self.inputs.iter().zip(&self.labels).enumerate() {
            if x.len() != model.input_dim() {
                return Err(Error::Row {
                    row,
                    message: format!("{} features, model expects {}", x.len(), model.input_dim()),
                });
            }
            if y >= model.num_classes() {
                return Err(Error::Row {
                    row,
                    message: format!("label {y} but the model has {} classes", model.num_classes()),
                });
            }
        }
        Ok(())
    }
}

/// Which bound produced `distance_min`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Winner {
    Alg1,
    Second,
    BothFailed,
    Misclassified,
}

impl Winner {
    pub fn as_str(self) -> &'static str {
        match self {
            Winner::Alg1 => "alg1",
            Winner::Second => "second",
            Winner::BothFailed => "both_failed",
            Winner::Misclassified => "misclassified",
        }
    }
}

impl fmt::Display for Winner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Winner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alg1" => Ok(Winner::Alg1),
            "second" => Ok(Winner::Second),
            "both_failed" => Ok(Winner::BothFailed),
            "misclassified" => Ok(Winner::Misclassified),
            other => Err(Error::domain(format!("unknown winner {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRecord<T> {
    /// Row in the dataset.
    pub index: usize,
    pub true_label: usize,
    pub predicted_label: usize,
    pub initially_correct: bool,
    pub distance_alg1: Option<T>,
    pub distance_second: Option<T>,
    pub distance_min: T,
    pub winner: Winner,
    pub clever_score: Option<T>,
    /// `clever_score <= distance_min`
    pub clever_valid: Option<bool>,
    /// Steps taken by the early-stopping loop.
    pub iterations_alg1: Option<usize>,
}

/// Sampling radius used for CLEVER.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RadiusPolicy {
    /// Largest `distance_min` over the dataset, shared by all images.
    #[default]
    GlobalMax,
    /// Each image's own `distance_min`.
    PerPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationConfig<T> {
    pub attack: AttackConfig<T>,
    /// `None` runs the early-stopping loop alone.
    pub second: Option<SecondAttackConfig<T>>,
    /// `None` skips the lower-bound pass.
    pub clever: Option<CleverPreset>,
    pub radius_policy: RadiusPolicy,
    /// Budgets at which adversarial accuracy is reported.
    pub eps_grid: Vec<T>,
    /// Run seed; per-image and per-class streams are derived from it.
    pub seed: u64,
    /// Thread count; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl<T: Scalar> EvaluationConfig<T> {
    /// Default attack, second attack and grid for `norm`.
    pub fn for_norm(norm: NormKind, seed: u64) -> Self {
        Self {
            attack: AttackConfig::defaults_for(norm),
            second: Some(SecondAttackConfig::for_norm(norm)),
            clever: Some(CleverPreset::default()),
            radius_policy: RadiusPolicy::GlobalMax,
            eps_grid: default_eps_grid(norm),
            seed,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.attack.validate()?;
        if let Some(second) = &self.second {
            second.validate(self.attack.norm)?;
        }
        if let Some(eps) = self.eps_grid.iter().find(|e| !(**e > T::zero())) {
            return Err(Error::config(format!("budget grid values must be > 0, got {eps}")));
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers must be at least 1"));
        }
        Ok(())
    }
}

/// Budgets for accuracy reporting. L∞ uses the usual 8-bit image steps.
pub fn default_eps_grid<T: Scalar>(norm: NormKind) -> Vec<T> {
    let values: &[f64] = match norm {
        NormKind::Infinity => &[1.0 / 255.0, 2.0 / 255.0, 4.0 / 255.0, 8.0 / 255.0],
        NormKind::Two => &[0.1, 0.25, 0.5, 1.0],
        NormKind::One => &[0.5, 1.0, 2.0, 4.0],
    };
    values.iter().map(|&v| T::lit(v)).collect()
}

/// Summed per-image wall times for each phase, plus the overall wall time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Runtimes {
    pub alg1: Duration,
    pub second: Duration,
    pub clever: Duration,
    pub total: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport<T> {
    pub norm: NormKind,
    /// Ascending by `distance_min`; ties keep dataset order.
    pub records: Vec<EvaluationRecord<T>>,
    /// `records[k]` came from dataset row `permutation[k]`.
    pub permutation: Vec<usize>,
    /// Largest `distance_min`; the CLEVER radius under [`RadiusPolicy::GlobalMax`].
    pub radius_max: T,
    pub mean_adversarial_distance: T,
    pub adversarial_accuracy_at: Vec<(T, T)>,
    /// `None` when no record has a CLEVER score.
    pub clever_error_ratio: Option<T>,
    pub runtimes: Runtimes,
    /// Every attacked image failed, so `distance_min` holds the raw budget.
    pub all_attacks_failed: bool,
}

impl<T: Scalar> EvaluationReport<T> {
    pub fn adversarial_accuracy(&self, epsilon: T) -> Result<T> {
        adversarial_accuracy(&self.records, epsilon)
    }

    pub fn distances(&self) -> Vec<T> {
        self.records.iter().map(|r| r.distance_min).collect()
    }

    pub fn clever_scores(&self) -> Vec<Option<T>> {
        self.records.iter().map(|r| r.clever_score).collect()
    }
}

/// Attack phase for one image. No CLEVER, no substitution yet.
pub fn attack_image<T: Scalar, M: Classifier<T>>(
    model: &M,
    x: &Tensor<T>,
    y: usize,
    index: usize,
    cfg: &EvaluationConfig<T>,
) -> Result<(EvaluationRecord<T>, Duration, Duration)> {
    let predicted = model.forward(x)?.label;
    let mut record = EvaluationRecord {
        index,
        true_label: y,
        predicted_label: predicted,
        initially_correct: predicted == y,
        distance_alg1: None,
        distance_second: None,
        distance_min: T::zero(),
        winner: Winner::Misclassified,
        clever_score: None,
        clever_valid: None,
        iterations_alg1: None,
    };
    if predicted != y {
        return Ok((record, Duration::ZERO, Duration::ZERO));
    }
    let seed = image_seed(cfg.seed, index);
    let first = early_stopping_attack(model, x, y, &cfg.attack.with_seed(seed))?;
    record.distance_alg1 = first.found_distance();
    record.iterations_alg1 = Some(first.iterations_used);
    let mut second_time = Duration::ZERO;
    if let Some(second_cfg) = &cfg.second {
        let res = second_attack(model, x, y, cfg.attack.norm, &second_cfg.with_seed(seed))?;
        record.distance_second = res.found_distance();
        second_time = res.wall_time;
    }
    (record.distance_min, record.winner) = match (record.distance_alg1, record.distance_second) {
        (Some(a), Some(s)) if s < a => (s, Winner::Second),
        (Some(a), _) => (a, Winner::Alg1),
        (None, Some(s)) => (s, Winner::Second),
        (None, None) => (T::zero(), Winner::BothFailed),
    };
    Ok((record, first.wall_time, second_time))
}

/// Fills `distance_min` of both-failed records. Returns true when no record
/// succeeded, in which case the raw budget is used.
pub fn apply_substitution<T: Scalar>(records: &mut [EvaluationRecord<T>], budget: T) -> bool {
    let successes = records
        .iter()
        .filter(|r| matches!(r.winner, Winner::Alg1 | Winner::Second))
        .map(|r| r.distance_min)
        .reduce(T::max);
    let any_failed = records.iter().any(|r| r.winner == Winner::BothFailed);
    let fill = successes.unwrap_or(budget);
    for r in records.iter_mut().filter(|r| r.winner == Winner::BothFailed) {
        r.distance_min = fill;
    }
    any_failed && successes.is_none()
}

fn with_pool<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Full ensemble evaluation.
pub fn evaluate<T: Scalar, M: Classifier<T>>(
    model: &M,
    dataset: &Dataset<T>,
    cfg: &EvaluationConfig<T>,
) -> Result<EvaluationReport<T>> {
    let started = Instant::now();
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::domain("empty dataset"));
    }
    dataset.check_against(model)?;

    with_pool(cfg.workers, || {
        let attacked: Vec<_> = (0..dataset.len())
            .into_par_iter()
            .map(|i| attack_image(model, &dataset.inputs[i], dataset.labels[i], i, cfg))
            .collect::<Result<_>>()?;
        let mut runtimes = Runtimes::default();
        let mut records = Vec::with_capacity(attacked.len());
        for (record, t1, t2) in attacked {
            runtimes.alg1 += t1;
            runtimes.second += t2;
            records.push(record);
        }

        let all_failed = apply_substitution(&mut records, cfg.attack.budget());
        if all_failed {
            warn!("no attack succeeded on any image; distances are the raw budget");
        }
        let radius_max = records
            .iter()
            .map(|r| r.distance_min)
            .fold(T::zero(), T::max);

        if let Some(preset) = cfg.clever {
            let clever_started = Instant::now();
            let scores: Vec<Option<T>> = records
                .par_iter()
                .map(|r| {
                    let radius = match cfg.radius_policy {
                        RadiusPolicy::GlobalMax => radius_max,
                        RadiusPolicy::PerPoint => r.distance_min,
                    };
                    if !r.initially_correct || !(radius > T::zero()) {
                        return Ok(None);
                    }
                    let ccfg = CleverConfig::new(radius, cfg.attack.norm, preset)
                        .with_seed(image_seed(cfg.seed, r.index));
                    clever_score(model, &dataset.inputs[r.index], &ccfg).map(|s| Some(s.score))
                })
                .collect::<Result<_>>()?;
            for (r, s) in records.iter_mut().zip(scores) {
                r.clever_score = s;
                r.clever_valid = s.map(|s| s <= r.distance_min);
            }
            runtimes.clever = clever_started.elapsed();
        }

        records.sort_by(|a, b| a.distance_min.partial_cmp(&b.distance_min).unwrap_or(Ordering::Equal));
        let permutation = records.iter().map(|r| r.index).collect();
        let mean = mean_adversarial_distance(&records)?;
        let accuracy = cfg
            .eps_grid
            .iter()
            .map(|&e| Ok((e, adversarial_accuracy(&records, e)?)))
            .collect::<Result<_>>()?;
        let err = clever_error_ratio(&records).ok();
        runtimes.total = started.elapsed();
        Ok(EvaluationReport {
            norm: cfg.attack.norm,
            records,
            permutation,
            radius_max,
            mean_adversarial_distance: mean,
            adversarial_accuracy_at: accuracy,
            clever_error_ratio: err,
            runtimes,
            all_attacks_failed: all_failed,
        })
    })?
}

/// Mean of `distance_min` over all records.
pub fn mean_adversarial_distance<T: Scalar>(records: &[EvaluationRecord<T>]) -> Result<T> {
    if records.is_empty() {
        return Err(Error::domain("mean over no records"));
    }
    let sum: T = records.iter().map(|r| r.distance_min).sum();
    Ok(sum / T::from_usize_lossy(records.len()))
}

/// Fraction of records with `distance_min > epsilon`. This is relative to
/// the attacks used: a point counts as robust if they found nothing closer.
pub fn adversarial_accuracy<T: Scalar>(records: &[EvaluationRecord<T>], epsilon: T) -> Result<T> {
    if !(epsilon > T::zero()) {
        return Err(Error::domain(format!("budget must be > 0, got {epsilon}")));
    }
    if records.is_empty() {
        return Err(Error::domain("accuracy over no records"));
    }
    let robust = records.iter().filter(|r| r.distance_min > epsilon).count();
    Ok(T::from_usize_lossy(robust) / T::from_usize_lossy(records.len()))
}

/// Fraction of CLEVER-scored records whose score exceeds the distance an
/// attack actually found.
pub fn clever_error_ratio<T: Scalar>(records: &[EvaluationRecord<T>]) -> Result<T> {
    let eligible: Vec<_> = records
        .iter()
        .filter(|r| r.initially_correct)
        .filter_map(|r| r.clever_score.map(|s| (s, r.distance_min)))
        .collect();
    if eligible.is_empty() {
        return Err(Error::domain("no record carries a CLEVER score"));
    }
    let violations = eligible.iter().filter(|(s, d)| s > d).count();
    Ok(T::from_usize_lossy(violations) / T::from_usize_lossy(eligible.len()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffConfig<T> {
    pub norm: NormKind,
    /// Descending step sizes.
    pub eps_steps: Vec<T>,
    /// Total perturbation budget; each row uses `ceil(budget / eps_step)` iterations.
    pub budget: T,
    /// Each row is timed this many times and the fastest run kept.
    pub repeats: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffRow<T> {
    pub eps_step: T,
    pub max_iters: usize,
    pub mean_distance: T,
    pub runtime: Duration,
    pub successes: usize,
    /// Per attacked image, in dataset order.
    pub distances: Vec<T>,
    pub iterations: Vec<usize>,
}

/// Early-stopping attack at each step size on the same images. Runs on the
/// calling thread so that the timings are comparable.
pub fn tradeoff_study<T: Scalar, M: Classifier<T>>(
    model: &M,
    dataset: &Dataset<T>,
    cfg: &TradeoffConfig<T>,
) -> Result<Vec<TradeoffRow<T>>> {
    if cfg.eps_steps.is_empty() {
        return Err(Error::config("no step sizes given"));
    }
    if cfg.eps_steps.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::config("step sizes must be strictly descending"));
    }
    if !(cfg.budget > T::zero()) || cfg.repeats == 0 {
        return Err(Error::config("budget must be > 0 and repeats >= 1"));
    }
    if dataset.is_empty() {
        return Err(Error::domain("empty dataset"));
    }
    dataset.check_against(model)?;

    let mut rows = Vec::with_capacity(cfg.eps_steps.len());
    for &eps in &cfg.eps_steps {
        let max_iters = (cfg.budget / eps).ceil().to_usize().unwrap_or(usize::MAX).max(1);
        let eval_cfg = EvaluationConfig {
            attack: AttackConfig::new(cfg.norm, eps, max_iters),
            second: None,
            clever: None,
            radius_policy: RadiusPolicy::GlobalMax,
            eps_grid: Vec::new(),
            seed: cfg.seed,
            workers: None,
        };
        let mut best: Option<Duration> = None;
        let mut records = Vec::new();
        for _ in 0..cfg.repeats {
            let started = Instant::now();
            records = (0..dataset.len())
                .map(|i| attack_image(model, &dataset.inputs[i], dataset.labels[i], i, &eval_cfg).map(|r| r.0))
                .collect::<Result<Vec<_>>>()?;
            let t = started.elapsed();
            best = Some(best.map_or(t, |b| b.min(t)));
        }
        let successes = records.iter().filter(|r| r.winner == Winner::Alg1).count();
        apply_substitution(&mut records, eval_cfg.attack.budget());
        rows.push(TradeoffRow {
            eps_step: eps,
            max_iters,
            mean_distance: mean_adversarial_distance(&records)?,
            runtime: best.unwrap_or_default(),
            successes,
            distances: records.iter().map(|r| r.distance_min).collect(),
            iterations: records.iter().map(|r| r.iterations_alg1.unwrap_or(0)).collect(),
        });
    }
    Ok(rows)
}
