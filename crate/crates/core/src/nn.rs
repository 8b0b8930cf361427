//! Named parameters, layer building blocks, the cross-entropy loss and the
//! SGD optimizer.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// Lower clamp applied inside `log` by [`cross_entropy`].
pub const LOG_FLOOR: f64 = 1e-12;

/// Ordered, uniquely named parameter tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams<F = f32> {
    names: Vec<String>,
    tensors: Vec<Tensor<F>>,
    index: HashMap<String, usize>,
}

impl<F: Scalar> Default for LayerParams<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Scalar> LayerParams<F> {
    pub fn new() -> Self {
        LayerParams {
            names: Vec::new(),
            tensors: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor<F>) -> Result<()> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::InvalidArgument(format!("duplicate parameter name {name}")));
        }
        self.index.insert(name.clone(), self.names.len());
        self.names.push(name);
        self.tensors.push(tensor);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<F>> {
        self.position(name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<F>> {
        self.position(name).map(move |i| &mut self.tensors[i])
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor<F>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<F>] {
        &mut self.tensors
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<F>)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn cast<G: Scalar>(&self) -> LayerParams<G> {
        LayerParams {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
            index: self.index.clone(),
        }
    }

    /// Total number of scalar parameters.
    pub fn count(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }
}

/// How a parameter is initialised.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    /// Uniform on `(−a, a)` with `a = sqrt(6 / (fan_in + fan_out))`.
    Uniform { fan_in: usize, fan_out: usize },
    /// Uniform on `(−a, a)` with `a = sqrt(6 / fan_in)`, for kernels
    /// followed by a ReLU.
    ReluUniform { fan_in: usize },
    Zeros,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

impl ParamSpec {
    pub fn uniform(name: impl Into<String>, shape: impl Into<Vec<usize>>, fan_in: usize, fan_out: usize) -> Self {
        ParamSpec {
            name: name.into(),
            shape: shape.into(),
            init: Init::Uniform { fan_in, fan_out },
        }
    }

    pub fn relu_uniform(name: impl Into<String>, shape: impl Into<Vec<usize>>, fan_in: usize) -> Self {
        ParamSpec {
            name: name.into(),
            shape: shape.into(),
            init: Init::ReluUniform { fan_in },
        }
    }

    pub fn zeros(name: impl Into<String>, shape: impl Into<Vec<usize>>) -> Self {
        ParamSpec {
            name: name.into(),
            shape: shape.into(),
            init: Init::Zeros,
        }
    }
}

/// Half-width of the uniform initialisation interval.
pub fn uniform_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Initialises every spec in order from one seeded stream.
pub fn init_params<F: Scalar>(specs: &[ParamSpec], seed: u64) -> Result<LayerParams<F>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = LayerParams::new();
    for spec in specs {
        let n: usize = spec.shape.iter().product();
        let data = match spec.init {
            Init::Zeros => vec![F::zero(); n],
            Init::Uniform { fan_in: 0, .. } | Init::Uniform { fan_out: 0, .. } | Init::ReluUniform { fan_in: 0 } => {
                return Err(Error::InvalidArgument(format!(
                    "parameter {} needs positive fan-in/fan-out",
                    spec.name
                )));
            }
            Init::Uniform { fan_in, fan_out } => {
                let a = uniform_bound(fan_in, fan_out);
                (0..n).map(|_| F::of(rng.gen_range(-a..a))).collect()
            }
            Init::ReluUniform { fan_in } => {
                let a = (6.0 / fan_in as f64).sqrt();
                (0..n).map(|_| F::of(rng.gen_range(-a..a))).collect()
            }
        };
        params.insert(spec.name.clone(), Tensor::new(spec.shape.clone(), data)?)?;
    }
    Ok(params)
}

/// Lazily registers parameters from a [`LayerParams`] on a tape.
pub struct Bound<'p, F: Scalar> {
    params: &'p LayerParams<F>,
    vars: Vec<Option<Var>>,
}

impl<'p, F: Scalar> Bound<'p, F> {
    pub fn new(params: &'p LayerParams<F>) -> Self {
        Bound {
            params,
            vars: vec![None; params.len()],
        }
    }

    pub fn var(&mut self, tape: &mut Tape<F>, name: &str) -> Result<Var> {
        let i = self
            .params
            .position(name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown parameter {name}")))?;
        Ok(*self.vars[i].get_or_insert_with(|| tape.param(self.params.tensors[i].clone())))
    }

    pub fn bound_var(&self, name: &str) -> Option<Var> {
        self.params.position(name).and_then(|i| self.vars[i])
    }

    /// Gradients for every parameter, in store order; `None` for parameters
    /// never touched by this forward pass.
    pub fn take_grads(&self, tape: &mut Tape<F>) -> Vec<Option<Tensor<F>>> {
        self.vars
            .iter()
            .map(|v| v.and_then(|v| tape.take_grad(v)))
            .collect()
    }
}

/// The class index of an image together with its one-hot encoding.
#[derive(Clone, Debug, PartialEq)]
pub struct Label {
    pub class_index: usize,
    pub one_hot: Tensor<f32>,
}

impl Label {
    pub fn new(class_index: usize, n_classes: usize) -> Result<Self> {
        Ok(Label {
            class_index,
            one_hot: Tensor::one_hot(n_classes, class_index)?,
        })
    }
}

/// `x·W + b` for a vector `x: [d_in]`, `W: [d_in×d_out]`, `b: [d_out]`.
pub fn linear<F: Scalar>(tape: &mut Tape<F>, x: Var, weight: Var, bias: Var) -> Result<Var> {
    let d_in = tape.value(x).numel();
    let row = tape.reshape(x, [1, d_in])?;
    let prod = tape.matmul(row, weight)?;
    let d_out = tape.shape(prod)[1];
    let flat = tape.reshape(prod, [d_out])?;
    tape.add(flat, bias)
}

/// Convolution, per-channel bias, then ReLU. `bias` has shape `[C_out]`.
pub fn conv_block<F: Scalar>(
    tape: &mut Tape<F>,
    x: Var,
    kernel: Var,
    bias: Var,
    stride: usize,
    pad: usize,
) -> Result<Var> {
    let conv = tape.conv2d(x, kernel, stride, pad)?;
    let c = tape.value(bias).numel();
    let b = tape.reshape(bias, [c, 1, 1])?;
    let biased = tape.add(conv, b)?;
    Ok(tape.relu(biased))
}

/// `−(1/D) Σᵢ gtᵢ · log pᵢ`, with the log clamped below at [`LOG_FLOOR`].
pub fn cross_entropy<F: Scalar>(tape: &mut Tape<F>, gt: &Tensor<F>, p: Var) -> Result<Var> {
    let d = tape.value(p).numel();
    if gt.numel() != d || d == 0 {
        return Err(Error::ShapeMismatch {
            op: "cross_entropy",
            lhs: gt.shape().to_vec(),
            rhs: tape.shape(p).to_vec(),
        });
    }
    let gt = gt.reshaped(tape.shape(p).to_vec())?;
    let gt = tape.constant(gt);
    let logp = tape.log_clamped(p, F::of(LOG_FLOOR));
    let weighted = tape.mul(logp, gt)?;
    let total = tape.sum(weighted);
    Ok(tape.scale(total, F::of(-1.0 / d as f64)))
}

/// Stochastic gradient descent with classical momentum:
/// `v ← μ·v + g`, `θ ← θ − lr·v`.
#[derive(Clone, Debug)]
pub struct Sgd<F = f32> {
    pub lr: F,
    pub momentum: F,
    velocity: Vec<Tensor<F>>,
}

impl<F: Scalar> Sgd<F> {
    pub fn new(params: &LayerParams<F>, lr: F, momentum: F) -> Self {
        Sgd {
            lr,
            momentum,
            velocity: params.tensors().iter().map(Tensor::zeros_like).collect(),
        }
    }

    /// Applies one update. `grads` is aligned with the parameter order;
    /// missing entries count as zero gradient.
    pub fn step(&mut self, params: &mut LayerParams<F>, grads: &[Option<Tensor<F>>]) {
        for ((p, v), g) in params.tensors_mut().iter_mut().zip(&mut self.velocity).zip(grads) {
            let vd = v.data_mut();
            match g {
                Some(g) => {
                    for (vi, &gi) in vd.iter_mut().zip(g.data()) {
                        *vi = self.momentum * *vi + gi;
                    }
                }
                None => {
                    for vi in vd.iter_mut() {
                        *vi *= self.momentum;
                    }
                }
            }
            for (pi, &vi) in p.data_mut().iter_mut().zip(v.data()) {
                *pi -= self.lr * vi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_names_rejected() {
        let mut p = LayerParams::<f32>::new();
        p.insert("w", Tensor::zeros([2])).unwrap();
        assert!(p.insert("w", Tensor::zeros([2])).is_err());
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let specs = vec![
            ParamSpec::uniform("w", [20, 30], 20, 30),
            ParamSpec::zeros("b", [30]),
        ];
        let a: LayerParams<f32> = init_params(&specs, 7).unwrap();
        let b: LayerParams<f32> = init_params(&specs, 7).unwrap();
        let c: LayerParams<f32> = init_params(&specs, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.get("w"), c.get("w"));
        let bound = uniform_bound(20, 30) as f32;
        assert!(a.get("w").unwrap().data().iter().all(|v| v.abs() < bound));
        assert!(a.get("b").unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_fan_rejected() {
        let specs = vec![ParamSpec::uniform("w", [0, 3], 0, 3)];
        assert!(init_params::<f32>(&specs, 0).is_err());
    }

    #[test]
    fn linear_identity() {
        let mut tape = Tape::<f32>::new();
        let x = tape.constant(Tensor::new([3], vec![1.0, -2.0, 3.5]).unwrap());
        let mut eye = Tensor::zeros([3, 3]);
        for i in 0..3 {
            eye.data_mut()[i * 3 + i] = 1.0;
        }
        let w = tape.param(eye);
        let b = tape.param(Tensor::zeros([3]));
        let y = linear(&mut tape, x, w, b).unwrap();
        assert_eq!(tape.value(y).data(), &[1.0, -2.0, 3.5]);
    }

    #[test]
    fn conv_block_zero_kernel_gives_zero() {
        let mut tape = Tape::<f32>::new();
        let x = tape.constant(Tensor::full([2, 4, 4], -3.0));
        let k = tape.param(Tensor::zeros([3, 2, 3, 3]));
        let b = tape.param(Tensor::zeros([3]));
        let y = conv_block(&mut tape, x, k, b, 1, 1).unwrap();
        assert_eq!(tape.shape(y), &[3, 4, 4]);
        assert!(tape.value(y).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cross_entropy_values() {
        let mut tape = Tape::<f64>::new();
        let gt = Tensor::one_hot(4, 2).unwrap();
        let p = tape.constant(Tensor::full([4], 0.25));
        let ce = cross_entropy(&mut tape, &gt, p).unwrap();
        let expected = 4f64.ln() / 4.0;
        assert!((tape.value(ce).item().unwrap() - expected).abs() < 1e-12);

        let certain = tape.constant(Tensor::one_hot(4, 2).unwrap());
        let zero = cross_entropy(&mut tape, &gt, certain).unwrap();
        assert_eq!(tape.value(zero).item().unwrap(), 0.0);

        let short = tape.constant(Tensor::full([3], 1.0 / 3.0));
        assert!(cross_entropy(&mut tape, &gt, short).is_err());
    }

    #[test]
    fn cross_entropy_clamps_log() {
        let mut tape = Tape::<f64>::new();
        let gt = Tensor::one_hot(2, 0).unwrap();
        let p = tape.param(Tensor::from_f64([2], &[0.0, 1.0]).unwrap());
        let ce = cross_entropy(&mut tape, &gt, p).unwrap();
        let v = tape.value(ce).item().unwrap();
        assert!((v - (-(LOG_FLOOR.ln()) / 2.0)).abs() < 1e-9);
        tape.backward(ce).unwrap();
        assert!(tape.grad(p).unwrap().is_finite());
    }

    #[test]
    fn sgd_momentum_update() {
        let mut params = LayerParams::<f64>::new();
        params.insert("w", Tensor::from_f64([1], &[1.0]).unwrap()).unwrap();
        let mut opt = Sgd::new(&params, 0.1, 0.9);
        let g = vec![Some(Tensor::from_f64([1], &[1.0]).unwrap())];
        opt.step(&mut params, &g);
        assert!((params.get("w").unwrap().data()[0] - 0.9).abs() < 1e-12);
        opt.step(&mut params, &g);
        // v = 0.9·1 + 1 = 1.9
        assert!((params.get("w").unwrap().data()[0] - 0.71).abs() < 1e-12);
    }
}
