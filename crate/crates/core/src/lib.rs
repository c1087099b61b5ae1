//! Adversarial distance estimation for feed-forward classifiers.
//!
//! Upper bounds come from attacks that stop as soon as the predicted label
//! flips (an early-stopping PGD loop plus a norm-specific second attack);
//! lower-bound estimates come from the CLEVER score. [`evaluation`] combines
//! both over a dataset and [`io`] persists the results.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`). The `*64`
//! aliases below are what the CLI and the acceptance suite use.

// NaN-aware guards are written as `!(a > b)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attacks;
pub mod clever;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod io;
pub mod nn;
pub mod oracle;
pub mod rng;
pub mod scalar;
pub mod tensor;

pub use error::{Error, Result};
pub use geometry::NormKind;
pub use nn::{Classifier, DecisionModel, Layer, Network, Objective, Prediction};
pub use scalar::Scalar;
pub use tensor::Tensor;

pub type Tensor64 = Tensor<f64>;
pub type Tensor32 = Tensor<f32>;
pub type Network64 = Network<f64>;
pub type Network32 = Network<f32>;
pub type AttackConfig64 = attacks::AttackConfig<f64>;
pub type SecondAttackConfig64 = attacks::SecondAttackConfig<f64>;
pub type AttackResult64 = attacks::AttackResult<f64>;
pub type CleverConfig64 = clever::CleverConfig<f64>;
pub type CleverScore64 = clever::CleverScore<f64>;
pub type Dataset64 = evaluation::Dataset<f64>;
pub type EvaluationReport64 = evaluation::EvaluationReport<f64>;
pub type AffineClassifier64 = oracle::AffineClassifier<f64>;
