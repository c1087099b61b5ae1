//! Upper bounds on the minimal adversarial distance.
//!
//! [`early_stopping_attack`] repeats a single PGD step and stops on the
//! first label flip. The second attacks ([`hopskipjump`],
//! [`carlini_wagner_l2`], [`ead_l1`], [`deepfool_l2`]) are standalone
//! minimum-norm searches; [`second_attack`] picks one per norm.
//!
//! No attack invents a distance: a failed search returns `success = false`
//! and the caller decides what to substitute.

mod cw;
mod deepfool;
mod ead;
mod hsj;
mod pgd;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

pub use cw::carlini_wagner_l2;
pub use deepfool::deepfool_l2;
pub use ead::ead_l1;
pub use hsj::{boundary_bisection, hopskipjump};
pub use pgd::{early_stopping_attack, fgsm_early_stopping, pgd_single_step, pgd_step};

use crate::error::{Error, Result};
use crate::geometry::{lp_distance, NormKind};
use crate::nn::{Classifier, DecisionModel};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Direction of an L1 PGD step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum L1Direction {
    /// Whole step on the largest-magnitude gradient coordinate that can
    /// still move inside the box. This is the L1 steepest-ascent direction.
    #[default]
    SteepestCoordinate,
    /// `g / ‖g‖₁`, spread over every coordinate.
    Normalized,
}

/// Parameters of the early-stopping PGD loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackConfig<T> {
    pub norm: NormKind,
    /// Perturbation added per iteration, measured in `norm`.
    pub eps_step: T,
    pub max_iters: usize,
    pub seed: u64,
    pub l1_direction: L1Direction,
}

impl<T: Scalar> AttackConfig<T> {
    pub fn new(norm: NormKind, eps_step: T, max_iters: usize) -> Self {
        Self {
            norm,
            eps_step,
            max_iters,
            seed: 0,
            l1_direction: L1Direction::default(),
        }
    }

    /// Step sizes 0.0003 / 0.005 / 0.2 for L∞ / L2 / L1 with 500 iterations.
    pub fn defaults_for(norm: NormKind) -> Self {
        let eps = match norm {
            NormKind::Infinity => 0.0003,
            NormKind::Two => 0.005,
            NormKind::One => 0.2,
        };
        Self::new(norm, T::lit(eps), 500)
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Total budget `max_iters · eps_step`.
    pub fn budget(&self) -> T {
        T::from_usize_lossy(self.max_iters) * self.eps_step
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_step > T::zero()) || !self.eps_step.is_finite() {
            return Err(Error::config(format!("eps_step must be > 0, got {}", self.eps_step)));
        }
        if self.max_iters == 0 {
            return Err(Error::config("max_iters must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackResult<T> {
    pub x_adv: Tensor<T>,
    /// Label of `x_adv` differs from the true label and `x_adv` is in the box.
    pub success: bool,
    /// Lp distance from the original input; only meaningful on success.
    pub distance: T,
    pub iterations_used: usize,
    pub wall_time: Duration,
}

impl<T: Scalar> AttackResult<T> {
    /// Re-checks the candidate against the model before reporting it.
    pub(crate) fn verified<M: DecisionModel<T> + ?Sized>(
        model: &M,
        x: &Tensor<T>,
        y: usize,
        x_adv: Tensor<T>,
        norm: NormKind,
        iterations_used: usize,
        started: Instant,
    ) -> Result<Self> {
        let success = x_adv.in_unit_box() && model.label(&x_adv)? != y;
        let distance = lp_distance(x, &x_adv, norm)?;
        Ok(Self {
            x_adv,
            success,
            distance,
            iterations_used,
            wall_time: started.elapsed(),
        })
    }

    pub(crate) fn failure(x: &Tensor<T>, iterations_used: usize, started: Instant) -> Self {
        Self {
            x_adv: x.clone(),
            success: false,
            distance: T::zero(),
            iterations_used,
            wall_time: started.elapsed(),
        }
    }

    /// `Some(distance)` on success.
    pub fn found_distance(&self) -> Option<T> {
        self.success.then_some(self.distance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SecondAttackKind {
    HopSkipJump,
    CarliniWagnerL2,
    EadL1,
    DeepFoolL2,
}

impl SecondAttackKind {
    /// Per-norm choice: HSJ for L∞, CW for L2, EAD for L1.
    pub fn for_norm(norm: NormKind) -> Self {
        match norm {
            NormKind::Infinity => SecondAttackKind::HopSkipJump,
            NormKind::Two => SecondAttackKind::CarliniWagnerL2,
            NormKind::One => SecondAttackKind::EadL1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SecondAttackKind::HopSkipJump => "hsj",
            SecondAttackKind::CarliniWagnerL2 => "cw",
            SecondAttackKind::EadL1 => "ead",
            SecondAttackKind::DeepFoolL2 => "deepfool",
        }
    }
}

impl fmt::Display for SecondAttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SecondAttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hsj" | "hopskipjump" => Ok(SecondAttackKind::HopSkipJump),
            "cw" | "carlini_wagner_l2" => Ok(SecondAttackKind::CarliniWagnerL2),
            "ead" | "ead_l1" => Ok(SecondAttackKind::EadL1),
            "deepfool" | "deepfool_l2" => Ok(SecondAttackKind::DeepFoolL2),
            other => Err(Error::config(format!("unknown second attack {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CwParams<T> {
    pub kappa: T,
    pub learning_rate: T,
    pub initial_const: T,
    pub binary_search_steps: usize,
}

impl<T: Scalar> Default for CwParams<T> {
    fn default() -> Self {
        Self {
            kappa: T::zero(),
            learning_rate: T::lit(0.01),
            initial_const: T::lit(0.001),
            binary_search_steps: 9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EadParams<T> {
    /// L1 weight; also the soft-threshold applied after each gradient step.
    pub beta: T,
    pub kappa: T,
    pub learning_rate: T,
    pub initial_const: T,
    pub binary_search_steps: usize,
}

impl<T: Scalar> Default for EadParams<T> {
    fn default() -> Self {
        Self {
            beta: T::lit(0.001),
            kappa: T::zero(),
            learning_rate: T::lit(0.01),
            initial_const: T::lit(0.001),
            binary_search_steps: 9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsjParams<T> {
    /// `Two` or `Infinity`.
    pub norm: NormKind,
    pub init_trials: usize,
    pub initial_evals: usize,
    pub max_evals: usize,
    /// Bisection tolerance; `None` means `0.01 / d`.
    pub theta: Option<T>,
}

impl<T: Scalar> Default for HsjParams<T> {
    fn default() -> Self {
        Self {
            norm: NormKind::Two,
            init_trials: 100,
            initial_evals: 100,
            max_evals: 1000,
            theta: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeepFoolParams<T> {
    pub overshoot: T,
}

impl<T: Scalar> Default for DeepFoolParams<T> {
    fn default() -> Self {
        Self {
            overshoot: T::lit(0.02),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondAttackConfig<T> {
    pub kind: SecondAttackKind,
    pub iterations: usize,
    pub seed: u64,
    pub cw: CwParams<T>,
    pub ead: EadParams<T>,
    pub hsj: HsjParams<T>,
    pub deepfool: DeepFoolParams<T>,
}

impl<T: Scalar> SecondAttackConfig<T> {
    pub fn new(kind: SecondAttackKind, iterations: usize) -> Self {
        Self {
            kind,
            iterations,
            seed: 0,
            cw: CwParams::default(),
            ead: EadParams::default(),
            hsj: HsjParams::default(),
            deepfool: DeepFoolParams::default(),
        }
    }

    /// Default kind for `norm` with 40 iterations.
    pub fn for_norm(norm: NormKind) -> Self {
        let mut cfg = Self::new(SecondAttackKind::for_norm(norm), 40);
        if norm != NormKind::One {
            cfg.hsj.norm = norm;
        }
        cfg
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn native_norm(&self) -> NormKind {
        match self.kind {
            SecondAttackKind::HopSkipJump => self.hsj.norm,
            SecondAttackKind::CarliniWagnerL2 | SecondAttackKind::DeepFoolL2 => NormKind::Two,
            SecondAttackKind::EadL1 => NormKind::One,
        }
    }

    pub fn validate(&self, norm: NormKind) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("second attack needs at least one iteration"));
        }
        if self.kind == SecondAttackKind::HopSkipJump && self.hsj.norm == NormKind::One {
            return Err(Error::config("hopskipjump supports only the L2 and L∞ norms"));
        }
        if self.native_norm() != norm {
            return Err(Error::config(format!(
                "{} attacks in L{} but the evaluation norm is L{norm}",
                self.kind,
                self.native_norm()
            )));
        }
        Ok(())
    }
}

/// Runs the configured second attack after checking that it works in `norm`.
pub fn second_attack<T: Scalar, M: Classifier<T>>(
    model: &M,
    x: &Tensor<T>,
    y: usize,
    norm: NormKind,
    cfg: &SecondAttackConfig<T>,
) -> Result<AttackResult<T>> {
    cfg.validate(norm)?;
    match cfg.kind {
        SecondAttackKind::HopSkipJump => hopskipjump(model, x, y, cfg),
        SecondAttackKind::CarliniWagnerL2 => carlini_wagner_l2(model, x, y, cfg),
        SecondAttackKind::EadL1 => ead_l1(model, x, y, cfg),
        SecondAttackKind::DeepFoolL2 => {
            deepfool_l2(model, x, y, cfg.iterations, cfg.deepfool.overshoot)
        }
    }
}

/// Shared argument checks for the second attacks.
pub(crate) fn check_inputs<T: Scalar, M: DecisionModel<T> + ?Sized>(
    model: &M,
    x: &Tensor<T>,
    y: usize,
) -> Result<()> {
    if x.len() != model.input_dim() {
        return Err(Error::Shape {
            expected: model.input_dim(),
            actual: x.len(),
        });
    }
    if y >= model.num_classes() {
        return Err(Error::Index {
            index: y,
            num_classes: model.num_classes(),
        });
    }
    Ok(())
}
