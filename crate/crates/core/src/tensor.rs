use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Flat row-major array with a shape. Holds inputs, gradients and
/// perturbations alike.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() || shape.is_empty() {
            return Err(Error::TensorShape {
                shape,
                len: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    /// One-dimensional tensor.
    pub fn from_vec(data: Vec<T>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn from_f64(data: &[f64]) -> Self {
        Self::from_vec(data.iter().map(|&v| T::lit(v)).collect())
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![T::zero(); n],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.data.iter()
    }

    /// Same shape, new data. Panics if the lengths differ.
    pub fn with_data(&self, data: Vec<T>) -> Self {
        assert_eq!(data.len(), self.data.len(), "with_data length");
        Self {
            shape: self.shape.clone(),
            data,
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        self.with_data(self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.ensure_same_len(other)?;
        Ok(self.with_data(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    /// `self + alpha * other`
    pub fn axpy(&self, alpha: T, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + alpha * b)
    }

    pub fn scale(&self, alpha: T) -> Self {
        self.map(|v| v * alpha)
    }

    pub fn dot(&self, other: &Self) -> Result<T> {
        self.ensure_same_len(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(&a, &b)| a * b).sum())
    }

    pub fn in_unit_box(&self) -> bool {
        self.data.iter().all(|&v| v >= T::zero() && v <= T::one())
    }

    pub(crate) fn ensure_same_len(&self, other: &Self) -> Result<()> {
        if self.data.len() != other.data.len() {
            return Err(Error::Shape {
                expected: self.data.len(),
                actual: other.data.len(),
            });
        }
        Ok(())
    }
}

impl<T> Index<usize> for Tensor<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.data[i]
    }
}

impl<T> IndexMut<usize> for Tensor<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.data[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_must_match_data() {
        assert!(Tensor::<f64>::new(vec![2, 2], vec![0.0; 4]).is_ok());
        assert!(matches!(
            Tensor::<f64>::new(vec![2, 3], vec![0.0; 4]),
            Err(Error::TensorShape { .. })
        ));
    }

    #[test]
    fn arithmetic() {
        let a = Tensor::<f64>::from_vec(vec![1.0, 2.0]);
        let b = Tensor::<f64>::from_vec(vec![0.5, 0.25]);
        assert_eq!(a.sub(&b).unwrap().as_slice(), &[0.5, 1.75]);
        assert_eq!(a.axpy(2.0, &b).unwrap().as_slice(), &[2.0, 2.5]);
        assert_eq!(a.dot(&b).unwrap(), 1.0);
        assert!(a.sub(&Tensor::from_vec(vec![1.0])).is_err());
    }

    #[test]
    fn box_membership() {
        assert!(Tensor::<f64>::from_vec(vec![0.0, 1.0, 0.3]).in_unit_box());
        assert!(!Tensor::<f64>::from_vec(vec![1.0001]).in_unit_box());
    }
}
