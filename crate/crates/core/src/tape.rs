//! Reverse-mode automatic differentiation over [`Tensor`] values.
//!
//! Operations are recorded on a [`Tape`] in execution order, so the node list
//! is already topologically sorted. [`Tape::backward`] walks it once in
//! reverse. Gradients survive the pass only on leaves created with
//! [`Tape::param`] and on intermediate nodes explicitly marked with
//! [`Tape::retain`]; everything else is dropped.
//!
//! ```
//! use eat_core::{Tape, Tensor};
//!
//! let mut tape = Tape::<f64>::new();
//! let x = tape.param(Tensor::from_f64([3], &[1.0, -2.0, 0.5]).unwrap());
//! let y = tape.scale(x, 2.0);
//! tape.retain(y);
//! let y2 = tape.mul(y, y).unwrap();
//! let z = tape.sum(y2);
//! tape.backward(z).unwrap();
//! // dz/dy = 2y, dz/dx = 8x
//! assert_eq!(tape.grad(y).unwrap().data(), &[4.0, -8.0, 2.0]);
//! assert_eq!(tape.grad(x).unwrap().data(), &[8.0, -16.0, 4.0]);
//! ```

use crate::error::{Error, Result};
use crate::kernels::{self, ConvGeom};
use crate::scalar::Scalar;
use crate::tensor::{broadcast_map, Tensor};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op<F> {
    Leaf,
    Add(Var, Var, Option<Vec<usize>>),
    Sub(Var, Var, Option<Vec<usize>>),
    Mul(Var, Var, Option<Vec<usize>>),
    Scale(Var, F),
    MatMul {
        a: Var,
        b: Var,
        m: usize,
        k: usize,
        n: usize,
    },
    Conv2d {
        input: Var,
        kernel: Var,
        geom: ConvGeom,
        c_out: usize,
        cols: Vec<F>,
    },
    Relu(Var),
    MaxPool {
        input: Var,
        argmax: Vec<usize>,
    },
    AvgPool {
        input: Var,
        plane: usize,
    },
    Softmax {
        input: Var,
        width: usize,
    },
    Log {
        input: Var,
        floor: F,
    },
    Sum(Var),
    Index(Var, usize),
    Concat {
        parts: Vec<Var>,
        outer: usize,
        inners: Vec<usize>,
    },
    Reshape(Var),
}

#[derive(Debug)]
struct Node<F> {
    value: Tensor<F>,
    op: Op<F>,
    requires_grad: bool,
    is_param: bool,
    retained: bool,
    grad: Option<Tensor<F>>,
}

/// Operation record for one forward evaluation.
#[derive(Debug)]
pub struct Tape<F = f32> {
    nodes: Vec<Node<F>>,
    recording: bool,
    consumed: bool,
}

impl<F: Scalar> Default for Tape<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Scalar> Tape<F> {
    /// A tape that records operations for a later backward pass.
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            recording: true,
            consumed: false,
        }
    }

    /// A tape that only evaluates values. Forward results are identical to a
    /// recording tape; `backward` fails with [`Error::NotRecording`].
    pub fn inference() -> Self {
        Tape {
            nodes: Vec::new(),
            recording: false,
            consumed: false,
        }
    }

    pub fn is_recording(&self) -> bool {
        self.recording
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<F>, op: Op<F>, requires_grad: bool) -> Var {
        let (op, requires_grad) = if self.recording && requires_grad {
            (op, true)
        } else {
            (Op::Leaf, false)
        };
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
            is_param: false,
            retained: false,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    /// A constant input; no gradient flows into it.
    pub fn constant(&mut self, value: Tensor<F>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// A differentiable leaf whose gradient is kept after backward.
    pub fn param(&mut self, value: Tensor<F>) -> Var {
        let v = self.push(value, Op::Leaf, true);
        self.nodes[v.0].is_param = self.recording;
        v
    }

    /// Marks an intermediate node so its gradient survives backward.
    pub fn retain(&mut self, v: Var) {
        self.nodes[v.0].retained = true;
    }

    /// Copy of `v` that is cut off from gradient flow.
    pub fn detach(&mut self, v: Var) -> Var {
        let value = self.nodes[v.0].value.clone();
        self.constant(value)
    }

    pub fn value(&self, v: Var) -> &Tensor<F> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Gradient populated by [`Tape::backward`], if this node kept one.
    pub fn grad(&self, v: Var) -> Option<&Tensor<F>> {
        self.nodes[v.0].grad.as_ref()
    }

    pub fn take_grad(&mut self, v: Var) -> Option<Tensor<F>> {
        self.nodes[v.0].grad.take()
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    fn elementwise(
        &mut self,
        op: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(F, F) -> F,
    ) -> Result<(Tensor<F>, Option<Vec<usize>>)> {
        let av = &self.nodes[a.0].value;
        let bv = &self.nodes[b.0].value;
        let map = broadcast_map(op, av.shape(), bv.shape())?;
        let data: Vec<F> = match &map {
            None => av.data().iter().zip(bv.data()).map(|(&x, &y)| f(x, y)).collect(),
            Some(m) => av
                .data()
                .iter()
                .zip(m)
                .map(|(&x, &j)| f(x, bv.data()[j]))
                .collect(),
        };
        Ok((Tensor::new(av.shape().to_vec(), data)?, map))
    }

    /// `a + b`; `b` may broadcast onto `a` (right-aligned, size-1 axes stretch).
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (value, map) = self.elementwise("add", a, b, |x, y| x + y)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::Add(a, b, map), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (value, map) = self.elementwise("sub", a, b, |x, y| x - y)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::Sub(a, b, map), rg))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (value, map) = self.elementwise("mul", a, b, |x, y| x * y)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::Mul(a, b, map), rg))
    }

    pub fn scale(&mut self, a: Var, k: F) -> Var {
        let value = self.nodes[a.0].value.map(|x| x * k);
        let rg = self.rg(&[a]);
        self.push(value, Op::Scale(a, k), rg)
    }

    /// Matrix product of `m×k` and `k×n` operands.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                lhs: sa,
                rhs: sb,
            });
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut out = vec![F::zero(); m * n];
        kernels::gemm_nn(
            m,
            k,
            n,
            self.nodes[a.0].value.data(),
            self.nodes[b.0].value.data(),
            &mut out,
        );
        let rg = self.rg(&[a, b]);
        Ok(self.push(Tensor::new([m, n], out)?, Op::MatMul { a, b, m, k, n }, rg))
    }

    /// Zero-padded 2-D convolution of a `C_in×H×W` input with a
    /// `C_out×C_in×k×k` kernel.
    pub fn conv2d(&mut self, input: Var, kernel: Var, stride: usize, pad: usize) -> Result<Var> {
        let (si, sk) = (self.shape(input).to_vec(), self.shape(kernel).to_vec());
        let mismatch = || Error::ShapeMismatch {
            op: "conv2d",
            lhs: si.clone(),
            rhs: sk.clone(),
        };
        if si.len() != 3 || sk.len() != 4 || sk[1] != si[0] || sk[2] != sk[3] {
            return Err(mismatch());
        }
        if stride == 0 {
            return Err(Error::InvalidArgument("conv2d stride must be positive".into()));
        }
        let (c_in, h, w, c_out, k) = (si[0], si[1], si[2], sk[0], sk[2]);
        if k == 0 || k > h + 2 * pad || k > w + 2 * pad {
            return Err(Error::InvalidArgument(format!(
                "conv2d kernel {k} does not fit input {h}x{w} with padding {pad}"
            )));
        }
        let geom = ConvGeom {
            c_in,
            h,
            w,
            k,
            stride,
            pad,
            h_out: (h + 2 * pad - k) / stride + 1,
            w_out: (w + 2 * pad - k) / stride + 1,
        };
        let cols = kernels::im2col(&geom, self.nodes[input.0].value.data());
        let mut out = vec![F::zero(); c_out * geom.cols()];
        kernels::gemm_nn(
            c_out,
            geom.rows(),
            geom.cols(),
            self.nodes[kernel.0].value.data(),
            &cols,
            &mut out,
        );
        let value = Tensor::new([c_out, geom.h_out, geom.w_out], out)?;
        let rg = self.rg(&[input, kernel]);
        // The unfolded input is only needed for the kernel gradient.
        let cols = if rg && self.nodes[kernel.0].requires_grad {
            cols
        } else {
            Vec::new()
        };
        Ok(self.push(
            value,
            Op::Conv2d {
                input,
                kernel,
                geom,
                c_out,
                cols,
            },
            rg,
        ))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.nodes[a.0].value.map(|x| if x > F::zero() { x } else { F::zero() });
        let rg = self.rg(&[a]);
        self.push(value, Op::Relu(a), rg)
    }

    /// Max pooling over `k×k` windows of a `C×H×W` input. Ties go to the
    /// first position in row-major order.
    pub fn maxpool2d(&mut self, a: Var, k: usize, stride: usize) -> Result<Var> {
        let s = self.shape(a).to_vec();
        if s.len() != 3 {
            return Err(Error::InvalidArgument(format!("maxpool2d expects C×H×W, got {s:?}")));
        }
        let (c, h, w) = (s[0], s[1], s[2]);
        if k == 0 || stride == 0 || k > h || k > w {
            return Err(Error::InvalidArgument(format!(
                "maxpool2d window {k} (stride {stride}) does not fit {h}x{w}"
            )));
        }
        let (ho, wo) = ((h - k) / stride + 1, (w - k) / stride + 1);
        let x = self.nodes[a.0].value.data();
        let mut out = Vec::with_capacity(c * ho * wo);
        let mut argmax = Vec::with_capacity(c * ho * wo);
        for ch in 0..c {
            for oy in 0..ho {
                for ox in 0..wo {
                    let mut best = ch * h * w + oy * stride * w + ox * stride;
                    for ky in 0..k {
                        for kx in 0..k {
                            let idx = ch * h * w + (oy * stride + ky) * w + ox * stride + kx;
                            if x[idx] > x[best] {
                                best = idx;
                            }
                        }
                    }
                    out.push(x[best]);
                    argmax.push(best);
                }
            }
        }
        let rg = self.rg(&[a]);
        Ok(self.push(Tensor::new([c, ho, wo], out)?, Op::MaxPool { input: a, argmax }, rg))
    }

    /// Mean over the spatial axes of a `C×H×W` input, giving shape `[C]`.
    pub fn avgpool_global(&mut self, a: Var) -> Result<Var> {
        let s = self.shape(a).to_vec();
        if s.len() != 3 || s[1] * s[2] == 0 {
            return Err(Error::InvalidArgument(format!("avgpool_global expects C×H×W, got {s:?}")));
        }
        let plane = s[1] * s[2];
        let inv = F::one() / F::of(plane as f64);
        let x = self.nodes[a.0].value.data();
        let out: Vec<F> = x
            .chunks(plane)
            .map(|p| {
                let mut acc = F::zero();
                for &v in p {
                    acc += v;
                }
                acc * inv
            })
            .collect();
        let rg = self.rg(&[a]);
        Ok(self.push(Tensor::new([s[0]], out)?, Op::AvgPool { input: a, plane }, rg))
    }

    /// Softmax over the last axis, stabilised by subtracting the row maximum.
    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let s = self.shape(a).to_vec();
        let width = match s.last() {
            Some(&d) if d > 0 => d,
            _ => return Err(Error::InvalidArgument(format!("softmax over shape {s:?}"))),
        };
        let x = self.nodes[a.0].value.data();
        let mut out = Vec::with_capacity(x.len());
        for row in x.chunks(width) {
            let max = row.iter().copied().fold(F::neg_infinity(), F::max);
            let exps: Vec<F> = row.iter().map(|&v| (v - max).exp()).collect();
            let mut total = F::zero();
            for &e in &exps {
                total += e;
            }
            out.extend(exps.into_iter().map(|e| e / total));
        }
        let rg = self.rg(&[a]);
        Ok(self.push(Tensor::new(s, out)?, Op::Softmax { input: a, width }, rg))
    }

    /// Natural log with the argument clamped below at `floor`.
    pub fn log_clamped(&mut self, a: Var, floor: F) -> Var {
        let value = self.nodes[a.0].value.map(|x| x.max(floor).ln());
        let rg = self.rg(&[a]);
        self.push(value, Op::Log { input: a, floor }, rg)
    }

    /// Sum of all elements as a 0-d tensor.
    pub fn sum(&mut self, a: Var) -> Var {
        let total = self.nodes[a.0].value.sum();
        let rg = self.rg(&[a]);
        self.push(Tensor::scalar(total), Op::Sum(a), rg)
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let n = self.nodes[a.0].value.numel();
        let s = self.sum(a);
        self.scale(s, F::one() / F::of(n as f64))
    }

    /// Element `flat` (row-major) of `a` as a 0-d tensor.
    pub fn index(&mut self, a: Var, flat: usize) -> Result<Var> {
        let x = &self.nodes[a.0].value;
        if flat >= x.numel() {
            return Err(Error::InvalidArgument(format!(
                "index {flat} out of range for shape {:?}",
                x.shape()
            )));
        }
        let value = Tensor::scalar(x.data()[flat]);
        let rg = self.rg(&[a]);
        Ok(self.push(value, Op::Index(a, flat), rg))
    }

    /// Joins tensors along `axis`; all other axes must agree.
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let first = match parts.first() {
            Some(&p) => self.shape(p).to_vec(),
            None => return Err(Error::InvalidArgument("concat of zero tensors".into())),
        };
        if axis >= first.len() {
            return Err(Error::InvalidArgument(format!("concat axis {axis} for shape {first:?}")));
        }
        let mut out_shape = first.clone();
        out_shape[axis] = 0;
        for &p in parts {
            let s = self.shape(p);
            let agrees = s.len() == first.len()
                && s.iter().zip(&first).enumerate().all(|(i, (a, b))| i == axis || a == b);
            if !agrees {
                return Err(Error::ShapeMismatch {
                    op: "concat",
                    lhs: first,
                    rhs: s.to_vec(),
                });
            }
            out_shape[axis] += s[axis];
        }
        let outer: usize = first[..axis].iter().product();
        let trailing: usize = first[axis + 1..].iter().product();
        let inners: Vec<usize> = parts.iter().map(|&p| self.shape(p)[axis] * trailing).collect();
        let mut data = Vec::with_capacity(out_shape.iter().product());
        for o in 0..outer {
            for (&p, &inner) in parts.iter().zip(&inners) {
                data.extend_from_slice(&self.nodes[p.0].value.data()[o * inner..(o + 1) * inner]);
            }
        }
        let rg = self.rg(parts);
        Ok(self.push(
            Tensor::new(out_shape, data)?,
            Op::Concat {
                parts: parts.to_vec(),
                outer,
                inners,
            },
            rg,
        ))
    }

    /// Stacks equally shaped tensors along a new leading axis.
    pub fn stack(&mut self, parts: &[Var]) -> Result<Var> {
        let reshaped = parts
            .iter()
            .map(|&p| {
                let mut s = vec![1];
                s.extend_from_slice(self.shape(p));
                self.reshape(p, s)
            })
            .collect::<Result<Vec<_>>>()?;
        self.concat(&reshaped, 0)
    }

    pub fn reshape(&mut self, a: Var, shape: impl Into<Vec<usize>>) -> Result<Var> {
        let value = self.nodes[a.0].value.reshaped(shape).map_err(|_| Error::ShapeMismatch {
            op: "reshape",
            lhs: self.shape(a).to_vec(),
            rhs: Vec::new(),
        })?;
        let rg = self.rg(&[a]);
        Ok(self.push(value, Op::Reshape(a), rg))
    }

    /// Propagates gradients from the single-element `output` back through the
    /// tape. Afterwards [`Tape::grad`] answers for parameters and retained
    /// nodes; a tape supports exactly one backward pass.
    pub fn backward(&mut self, output: Var) -> Result<()> {
        if !self.recording {
            return Err(Error::NotRecording);
        }
        if self.consumed {
            return Err(Error::TapeConsumed);
        }
        let out_node = &self.nodes[output.0];
        if out_node.value.numel() != 1 {
            return Err(Error::NonScalarOutput(out_node.value.shape().to_vec()));
        }
        self.consumed = true;
        if !out_node.requires_grad {
            return Ok(());
        }

        let mut grads: Vec<Option<Vec<F>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[output.0] = Some(vec![F::one()]);

        for i in (0..=output.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            self.propagate(i, &g, &mut grads);
            if node.is_param || node.retained {
                let shape = node.value.shape().to_vec();
                self.nodes[i].grad = Some(Tensor::new(shape, g)?);
            }
        }
        Ok(())
    }

    fn propagate(&self, node: usize, g: &[F], grads: &mut [Option<Vec<F>>]) {
        let nodes = &self.nodes;
        let op = &nodes[node].op;
        // Accumulates into an input's gradient buffer if that input needs one.
        let mut accum = |v: Var, f: &mut dyn FnMut(&mut [F])| {
            if !nodes[v.0].requires_grad {
                return;
            }
            let buf = grads[v.0].get_or_insert_with(|| vec![F::zero(); nodes[v.0].value.numel()]);
            f(buf);
        };
        let reduce_into = |buf: &mut [F], map: &Option<Vec<usize>>, sign: F| match map {
            None => {
                for (b, &gv) in buf.iter_mut().zip(g) {
                    *b += sign * gv;
                }
            }
            Some(m) => {
                for (&j, &gv) in m.iter().zip(g) {
                    buf[j] += sign * gv;
                }
            }
        };
        match op {
            Op::Leaf => {}
            Op::Add(a, b, map) => {
                accum(*a, &mut |buf| {
                    for (x, &gv) in buf.iter_mut().zip(g) {
                        *x += gv;
                    }
                });
                accum(*b, &mut |buf| reduce_into(buf, map, F::one()));
            }
            Op::Sub(a, b, map) => {
                accum(*a, &mut |buf| {
                    for (x, &gv) in buf.iter_mut().zip(g) {
                        *x += gv;
                    }
                });
                accum(*b, &mut |buf| reduce_into(buf, map, -F::one()));
            }
            Op::Mul(a, b, map) => {
                let av = nodes[a.0].value.data();
                let bv = nodes[b.0].value.data();
                let b_at = |i: usize| match map {
                    None => bv[i],
                    Some(m) => bv[m[i]],
                };
                accum(*a, &mut |buf| {
                    for (i, x) in buf.iter_mut().enumerate() {
                        *x += g[i] * b_at(i);
                    }
                });
                accum(*b, &mut |buf| match map {
                    None => {
                        for (i, x) in buf.iter_mut().enumerate() {
                            *x += g[i] * av[i];
                        }
                    }
                    Some(m) => {
                        for (i, &j) in m.iter().enumerate() {
                            buf[j] += g[i] * av[i];
                        }
                    }
                });
            }
            Op::Scale(a, k) => accum(*a, &mut |buf| {
                for (x, &gv) in buf.iter_mut().zip(g) {
                    *x += *k * gv;
                }
            }),
            Op::MatMul { a, b, m, k, n } => {
                let av = nodes[a.0].value.data();
                let bv = nodes[b.0].value.data();
                accum(*a, &mut |buf| kernels::gemm_nt(*m, *n, *k, g, bv, buf));
                accum(*b, &mut |buf| kernels::gemm_tn(*k, *m, *n, av, g, buf));
            }
            Op::Conv2d {
                input,
                kernel,
                geom,
                c_out,
                cols,
            } => {
                let kv = nodes[kernel.0].value.data();
                accum(*kernel, &mut |buf| {
                    kernels::gemm_nt(*c_out, geom.cols(), geom.rows(), g, cols, buf)
                });
                accum(*input, &mut |buf| {
                    let mut dcols = vec![F::zero(); geom.rows() * geom.cols()];
                    kernels::gemm_tn(geom.rows(), *c_out, geom.cols(), kv, g, &mut dcols);
                    kernels::col2im(geom, &dcols, buf);
                });
            }
            Op::Relu(a) => {
                let x = nodes[a.0].value.data();
                accum(*a, &mut |buf| {
                    for i in 0..buf.len() {
                        if x[i] > F::zero() {
                            buf[i] += g[i];
                        }
                    }
                });
            }
            Op::MaxPool { input, argmax } => accum(*input, &mut |buf| {
                for (&src, &gv) in argmax.iter().zip(g) {
                    buf[src] += gv;
                }
            }),
            Op::AvgPool { input, plane } => {
                let inv = F::one() / F::of(*plane as f64);
                accum(*input, &mut |buf| {
                    for (c, chunk) in buf.chunks_mut(*plane).enumerate() {
                        let share = g[c] * inv;
                        for x in chunk {
                            *x += share;
                        }
                    }
                });
            }
            Op::Softmax { input, width } => {
                let y = nodes[node].value.data();
                accum(*input, &mut |buf| softmax_backward(y, g, *width, buf));
            }
            Op::Log { input, floor } => {
                let x = nodes[input.0].value.data();
                accum(*input, &mut |buf| {
                    for i in 0..buf.len() {
                        if x[i] > *floor {
                            buf[i] += g[i] / x[i];
                        }
                    }
                });
            }
            Op::Sum(a) => accum(*a, &mut |buf| {
                for x in buf.iter_mut() {
                    *x += g[0];
                }
            }),
            Op::Index(a, flat) => accum(*a, &mut |buf| buf[*flat] += g[0]),
            Op::Concat {
                parts,
                outer,
                inners,
            } => {
                let total: usize = inners.iter().sum();
                let mut offset = 0;
                for (&p, &inner) in parts.iter().zip(inners) {
                    accum(p, &mut |buf| {
                        for o in 0..*outer {
                            let src = &g[o * total + offset..o * total + offset + inner];
                            for (x, &gv) in buf[o * inner..(o + 1) * inner].iter_mut().zip(src) {
                                *x += gv;
                            }
                        }
                    });
                    offset += inner;
                }
            }
            Op::Reshape(a) => accum(*a, &mut |buf| {
                for (x, &gv) in buf.iter_mut().zip(g) {
                    *x += gv;
                }
            }),
        }
    }
}

fn softmax_backward<F: Scalar>(y: &[F], g: &[F], width: usize, buf: &mut [F]) {
    for ((yr, gr), br) in y.chunks(width).zip(g.chunks(width)).zip(buf.chunks_mut(width)) {
        let mut dot = F::zero();
        for (&yv, &gv) in yr.iter().zip(gr) {
            dot += yv * gv;
        }
        for ((b, &yv), &gv) in br.iter_mut().zip(yr).zip(gr) {
            *b += yv * (gv - dot);
        }
    }
}
