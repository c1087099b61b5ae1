//! Dense/ReLU classifiers with exact input gradients.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub enum Layer<T> {
    /// `out = weights · in + bias`, `weights` row-major with one row per
    /// output neuron.
    Dense {
        weights: Vec<T>,
        bias: Vec<T>,
        inputs: usize,
        outputs: usize,
    },
    Relu,
}

impl<T: Scalar> Layer<T> {
    /// Builds a dense layer from rows (row `i` = output neuron `i`).
    pub fn dense(rows: Vec<Vec<T>>, bias: Vec<T>) -> Result<Self> {
        let outputs = rows.len();
        if outputs == 0 {
            return Err(Error::domain("dense layer with no rows"));
        }
        let inputs = rows[0].len();
        if inputs == 0 {
            return Err(Error::domain("dense layer with empty rows"));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != inputs) {
            return Err(Error::Shape {
                expected: inputs,
                actual: bad.len(),
            });
        }
        if bias.len() != outputs {
            return Err(Error::Shape {
                expected: outputs,
                actual: bias.len(),
            });
        }
        Ok(Layer::Dense {
            weights: rows.into_iter().flatten().collect(),
            bias,
            inputs,
            outputs,
        })
    }

    fn widths(&self) -> Option<(usize, usize)> {
        match self {
            Layer::Dense {
                inputs, outputs, ..
            } => Some((*inputs, *outputs)),
            Layer::Relu => None,
        }
    }
}

/// Scalar function of the logits whose input gradient can be requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Softmax cross-entropy against `label`.
    CrossEntropy { label: usize },
    Logit { class: usize },
    /// `logit[c] - logit[j]`
    LogitDifference { c: usize, j: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T> {
    pub logits: Vec<T>,
    pub label: usize,
}

impl<T: Scalar> Prediction<T> {
    pub fn from_logits(logits: Vec<T>) -> Self {
        let label = argmax(&logits);
        Self { logits, label }
    }

    /// Largest logit among classes other than `label`, with its index.
    pub fn runner_up(&self, label: usize) -> (usize, T) {
        let mut best = (usize::MAX, T::neg_infinity());
        for (j, &z) in self.logits.iter().enumerate() {
            if j != label && (best.0 == usize::MAX || z > best.1) {
                best = (j, z);
            }
        }
        best
    }
}

/// Index of the maximal value; ties go to the lowest index.
pub fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Anything that returns a label. Decision-based attacks only see this.
pub trait DecisionModel<T: Scalar>: Sync {
    fn input_dim(&self) -> usize;
    fn num_classes(&self) -> usize;
    fn label(&self, x: &Tensor<T>) -> Result<usize>;
}

/// White-box access: logits and input gradients.
pub trait Classifier<T: Scalar>: DecisionModel<T> {
    fn forward(&self, x: &Tensor<T>) -> Result<Prediction<T>>;
    fn input_gradient(&self, x: &Tensor<T>, objective: Objective) -> Result<Tensor<T>>;
}

/// Feed-forward classifier. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    layers: Vec<Layer<T>>,
    num_classes: usize,
    input_dim: usize,
}

impl<T: Scalar> Network<T> {
    pub fn new(layers: Vec<Layer<T>>, num_classes: usize) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::domain("num_classes must be positive"));
        }
        let mut width: Option<usize> = None;
        let mut input_dim = None;
        for layer in &layers {
            if let Some((inputs, outputs)) = layer.widths() {
                match width {
                    Some(w) if w != inputs => {
                        return Err(Error::Shape {
                            expected: w,
                            actual: inputs,
                        })
                    }
                    None => input_dim = Some(inputs),
                    _ => {}
                }
                width = Some(outputs);
            }
        }
        let (Some(input_dim), Some(out)) = (input_dim, width) else {
            return Err(Error::domain("network needs at least one dense layer"));
        };
        if out != num_classes {
            return Err(Error::Shape {
                expected: num_classes,
                actual: out,
            });
        }
        Ok(Self {
            layers,
            num_classes,
            input_dim,
        })
    }

    /// Random ReLU network with He-normal weights and small random biases.
    /// `widths` = `[input, hidden..., classes]`.
    pub fn random_relu(widths: &[usize], seed: u64) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::domain("need at least input and output widths"));
        }
        let mut rng = rng_from_seed(seed);
        let mut layers = Vec::new();
        for (k, pair) in widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let std = (2.0 / fan_in as f64).sqrt();
            let rows = (0..fan_out)
                .map(|_| {
                    (0..fan_in)
                        .map(|_| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            T::lit(z * std)
                        })
                        .collect()
                })
                .collect();
            let bias = (0..fan_out)
                .map(|_| T::lit(rng.random_range(-0.1..0.1)))
                .collect();
            layers.push(Layer::dense(rows, bias)?);
            if k + 2 < widths.len() {
                layers.push(Layer::Relu);
            }
        }
        Self::new(layers, *widths.last().unwrap())
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    /// True when the network has no ReLU layers (logits are affine in x).
    pub fn is_affine(&self) -> bool {
        !self.layers.iter().any(|l| matches!(l, Layer::Relu))
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::Shape {
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    fn check_class(&self, class: usize) -> Result<()> {
        if class >= self.num_classes {
            return Err(Error::Index {
                index: class,
                num_classes: self.num_classes,
            });
        }
        Ok(())
    }

    /// Forward pass keeping every layer input for the backward sweep.
    fn forward_trace(&self, x: &[T]) -> (Vec<Vec<T>>, Vec<T>) {
        let mut trace = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        for layer in &self.layers {
            let next = match layer {
                Layer::Dense {
                    weights,
                    bias,
                    inputs,
                    ..
                } => weights
                    .chunks_exact(*inputs)
                    .zip(bias)
                    .map(|(row, &b)| row.iter().zip(&h).map(|(&w, &v)| w * v).sum::<T>() + b)
                    .collect(),
                Layer::Relu => h.iter().map(|&v| v.max(T::zero())).collect(),
            };
            trace.push(std::mem::replace(&mut h, next));
        }
        (trace, h)
    }

    fn logit_seed(&self, logits: &[T], objective: Objective) -> Result<Vec<T>> {
        let mut seed = vec![T::zero(); self.num_classes];
        match objective {
            Objective::CrossEntropy { label } => {
                self.check_class(label)?;
                let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
                let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
                let total: T = exps.iter().copied().sum();
                for (s, e) in seed.iter_mut().zip(&exps) {
                    *s = *e / total;
                }
                seed[label] -= T::one();
            }
            Objective::Logit { class } => {
                self.check_class(class)?;
                seed[class] = T::one();
            }
            Objective::LogitDifference { c, j } => {
                self.check_class(c)?;
                self.check_class(j)?;
                seed[c] += T::one();
                seed[j] -= T::one();
            }
        }
        Ok(seed)
    }

    /// Value of an objective at `x` (used by finite-difference checks).
    pub fn objective_value(&self, x: &Tensor<T>, objective: Objective) -> Result<T> {
        let p = self.forward(x)?;
        Ok(match objective {
            Objective::CrossEntropy { label } => {
                self.check_class(label)?;
                let max = p.logits.iter().copied().fold(T::neg_infinity(), T::max);
                let lse = p.logits.iter().map(|&z| (z - max).exp()).sum::<T>().ln() + max;
                lse - p.logits[label]
            }
            Objective::Logit { class } => {
                self.check_class(class)?;
                p.logits[class]
            }
            Objective::LogitDifference { c, j } => {
                self.check_class(c)?;
                self.check_class(j)?;
                p.logits[c] - p.logits[j]
            }
        })
    }
}

impl<T: Scalar> DecisionModel<T> for Network<T> {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn label(&self, x: &Tensor<T>) -> Result<usize> {
        Ok(self.forward(x)?.label)
    }
}

impl<T: Scalar> Classifier<T> for Network<T> {
    fn forward(&self, x: &Tensor<T>) -> Result<Prediction<T>> {
        self.check_input(x)?;
        let (_, logits) = self.forward_trace(x.as_slice());
        Ok(Prediction::from_logits(logits))
    }

    fn input_gradient(&self, x: &Tensor<T>, objective: Objective) -> Result<Tensor<T>> {
        self.check_input(x)?;
        let (trace, logits) = self.forward_trace(x.as_slice());
        let mut grad = self.logit_seed(&logits, objective)?;
        for (layer, input) in self.layers.iter().zip(&trace).rev() {
            grad = match layer {
                Layer::Dense {
                    weights, inputs, ..
                } => {
                    let mut back = vec![T::zero(); *inputs];
                    for (row, &g) in weights.chunks_exact(*inputs).zip(&grad) {
                        if g != T::zero() {
                            for (b, &w) in back.iter_mut().zip(row) {
                                *b += w * g;
                            }
                        }
                    }
                    back
                }
                // derivative 0 at the kink
                Layer::Relu => grad
                    .iter()
                    .zip(input)
                    .map(|(&g, &pre)| if pre > T::zero() { g } else { T::zero() })
                    .collect(),
            };
        }
        Ok(x.with_data(grad))
    }
}
