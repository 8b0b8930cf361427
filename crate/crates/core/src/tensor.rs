//! Dense row-major tensors.
//!
//! A [`Tensor`] is a plain value: a shape and a flat data buffer. It carries
//! no gradient state of its own; gradient bookkeeping lives on the
//! [`Tape`](crate::Tape) that records operations over tensors.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<F = f32> {
    shape: Vec<usize>,
    data: Vec<F>,
}

impl<F: Scalar> Tensor<F> {
    pub fn new(shape: impl Into<Vec<usize>>, data: Vec<F>) -> Result<Self> {
        let shape = shape.into();
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::InvalidArgument(format!(
                "shape {shape:?} holds {n} elements but data has {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    /// Builds a tensor from `f64` values, casting to `F`.
    pub fn from_f64(shape: impl Into<Vec<usize>>, data: &[f64]) -> Result<Self> {
        Self::new(shape, data.iter().map(|&v| F::of(v)).collect())
    }

    pub fn full(shape: impl Into<Vec<usize>>, value: F) -> Self {
        let shape = shape.into();
        let n = shape.iter().product();
        Tensor {
            shape,
            data: vec![value; n],
        }
    }

    pub fn zeros(shape: impl Into<Vec<usize>>) -> Self {
        Self::full(shape, F::zero())
    }

    pub fn ones(shape: impl Into<Vec<usize>>) -> Self {
        Self::full(shape, F::one())
    }

    pub fn zeros_like(other: &Tensor<F>) -> Self {
        Self::zeros(other.shape.clone())
    }

    pub fn ones_like(other: &Tensor<F>) -> Self {
        Self::ones(other.shape.clone())
    }

    /// A zero-dimensional tensor holding one value.
    pub fn scalar(value: F) -> Self {
        Tensor {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    /// One-hot vector of length `len` with a one at `index`.
    pub fn one_hot(len: usize, index: usize) -> Result<Self> {
        if index >= len {
            return Err(Error::InvalidArgument(format!(
                "one-hot index {index} out of range for length {len}"
            )));
        }
        let mut t = Self::zeros([len]);
        t.data[index] = F::one();
        Ok(t)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<F> {
        self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    /// The single value of a one-element tensor.
    pub fn item(&self) -> Result<F> {
        if self.data.len() != 1 {
            return Err(Error::NonScalarOutput(self.shape.clone()));
        }
        Ok(self.data[0])
    }

    pub fn reshaped(&self, shape: impl Into<Vec<usize>>) -> Result<Self> {
        Self::new(shape, self.data.clone())
    }

    pub fn cast<G: Scalar>(&self) -> Tensor<G> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| G::of(v.as_f64())).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(F) -> F) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Index of the largest element; ties resolve to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.data.iter().enumerate() {
            if v > self.data[best] {
                best = i;
            }
        }
        best
    }

    pub fn sum(&self) -> F {
        let mut acc = F::zero();
        for &v in &self.data {
            acc += v;
        }
        acc
    }
}

/// Maps every flat index of `target` onto the flat index of `source` under
/// right-aligned broadcasting: each `source` axis must equal the matching
/// `target` axis or be 1. Returns `None` when the shapes are identical.
pub(crate) fn broadcast_map(
    op: &'static str,
    target: &[usize],
    source: &[usize],
) -> Result<Option<Vec<usize>>> {
    if target == source {
        return Ok(None);
    }
    let mismatch = || Error::ShapeMismatch {
        op,
        lhs: target.to_vec(),
        rhs: source.to_vec(),
    };
    if source.len() > target.len() {
        return Err(mismatch());
    }
    let offset = target.len() - source.len();
    // Strides of the source laid over the target's axes, zero where broadcast.
    let mut strides = vec![0usize; target.len()];
    let mut stride = 1;
    for (axis, &dim) in source.iter().enumerate().rev() {
        let t = target[axis + offset];
        if dim == t {
            strides[axis + offset] = stride;
        } else if dim != 1 {
            return Err(mismatch());
        }
        stride *= dim;
    }
    let n: usize = target.iter().product();
    let mut map = Vec::with_capacity(n);
    let mut idx = vec![0usize; target.len()];
    for _ in 0..n {
        map.push(idx.iter().zip(&strides).map(|(i, s)| i * s).sum());
        for axis in (0..target.len()).rev() {
            idx[axis] += 1;
            if idx[axis] < target[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
    Ok(Some(map))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_checks_length() {
        assert!(Tensor::<f32>::new([2, 3], vec![0.0; 5]).is_err());
        let t = Tensor::<f32>::new([2, 3], vec![0.0; 6]).unwrap();
        assert_eq!(t.numel(), 6);
    }

    #[test]
    fn scalar_has_empty_shape() {
        let s = Tensor::scalar(3.0f32);
        assert_eq!(s.shape(), &[] as &[usize]);
        assert_eq!(s.item().unwrap(), 3.0);
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        let t = Tensor::<f32>::new([4], vec![1.0, 3.0, 3.0, 0.0]).unwrap();
        assert_eq!(t.argmax(), 1);
    }

    #[test]
    fn broadcast_rules() {
        assert!(broadcast_map("t", &[2, 3], &[2, 3]).unwrap().is_none());
        assert_eq!(
            broadcast_map("t", &[2, 3], &[3]).unwrap().unwrap(),
            vec![0, 1, 2, 0, 1, 2]
        );
        assert_eq!(
            broadcast_map("t", &[2, 3], &[2, 1]).unwrap().unwrap(),
            vec![0, 0, 0, 1, 1, 1]
        );
        assert!(broadcast_map("t", &[2, 3], &[2]).is_err());
        assert!(broadcast_map("t", &[3], &[2, 3]).is_err());
    }
}
