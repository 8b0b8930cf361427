//! Central finite differences for checking analytic gradients.
//!
//! The numeric side never touches the tape's backward pass: it only
//! evaluates a scalar function, normally at `f64` precision.

use crate::error::Result;
use crate::model::EatModel;
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// Central-difference gradient of `f` at `x` with the given step.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + step;
            let up = f(&probe);
            probe[i] = orig - step;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// `‖a − b‖₂ / max(‖a‖₂, ‖b‖₂)`, or the absolute difference norm when both
/// vectors are (near) zero.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "gradient length mismatch");
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale = norm(a).max(norm(b));
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

/// Fixed, non-uniform weights that turn a tensor output into a scalar.
fn projection(n: usize) -> Vec<f64> {
    (0..n).map(|j| 1.0 + 0.5 * (1.7 * j as f64).cos()).collect()
}

fn project(tape: &mut Tape<f64>, out: Var) -> Result<Var> {
    let shape = tape.shape(out).to_vec();
    let n = tape.value(out).numel();
    let w = tape.constant(Tensor::new(shape, projection(n))?);
    let weighted = tape.mul(out, w)?;
    Ok(tape.sum(weighted))
}

/// Relative error between the tape gradient and central differences of
/// `Σ_j w_j · build(inputs)_j` with respect to every input, where `w` is a
/// fixed projection.
pub fn tape_gradient_error(
    inputs: &[Tensor<f64>],
    build: impl Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
    step: f64,
) -> Result<f64> {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.param(t.clone())).collect();
    let out = build(&mut tape, &vars)?;
    let loss = project(&mut tape, out)?;
    tape.backward(loss)?;
    let analytic: Vec<f64> = vars
        .iter()
        .zip(inputs)
        .flat_map(|(&v, t)| match tape.grad(v) {
            Some(g) => g.data().to_vec(),
            None => vec![0.0; t.numel()],
        })
        .collect();

    let flat: Vec<f64> = inputs.iter().flat_map(|t| t.data().to_vec()).collect();
    let eval = |x: &[f64]| -> f64 {
        let mut tape = Tape::inference();
        let mut offset = 0;
        let vars: Vec<Var> = inputs
            .iter()
            .map(|t| {
                let n = t.numel();
                let v = Tensor::new(t.shape().to_vec(), x[offset..offset + n].to_vec()).expect("same shape");
                offset += n;
                tape.constant(v)
            })
            .collect();
        let out = build(&mut tape, &vars).expect("build succeeded once");
        let loss = project(&mut tape, out).expect("projection");
        tape.value(loss).data()[0]
    };
    let numeric = central_difference(eval, &flat, step);
    Ok(relative_error(&analytic, &numeric))
}

/// Relative error between the backpropagated gradient of the total training
/// loss and central differences, over every model parameter.
pub fn model_gradient_error(model: &EatModel<f64>, x: &Tensor<f64>, label: usize, attrs: &[u8], step: f64) -> Result<f64> {
    let mut fwd = model.forward(Tape::new(), x)?;
    let loss = model.loss(&mut fwd, label, attrs)?;
    fwd.tape.backward(loss.total)?;
    let grads = fwd.take_param_grads();
    let analytic: Vec<f64> = grads
        .iter()
        .zip(model.params().tensors())
        .flat_map(|(g, t)| match g {
            Some(g) => g.data().to_vec(),
            None => vec![0.0; t.numel()],
        })
        .collect();

    let mut probe = model.clone();
    let mut numeric = Vec::with_capacity(analytic.len());
    let total_loss = |m: &EatModel<f64>| -> Result<f64> {
        let mut fwd = m.forward(Tape::inference(), x)?;
        let loss = m.loss(&mut fwd, label, attrs)?;
        Ok(fwd.value(loss.total).data()[0])
    };
    let sizes: Vec<usize> = model.params().tensors().iter().map(Tensor::numel).collect();
    for (pi, &n) in sizes.iter().enumerate() {
        for j in 0..n {
            let orig = probe.params().tensors()[pi].data()[j];
            probe.params_mut().tensors_mut()[pi].data_mut()[j] = orig + step;
            let up = total_loss(&probe)?;
            probe.params_mut().tensors_mut()[pi].data_mut()[j] = orig - step;
            let down = total_loss(&probe)?;
            probe.params_mut().tensors_mut()[pi].data_mut()[j] = orig;
            numeric.push((up - down) / (2.0 * step));
        }
    }
    Ok(relative_error(&analytic, &numeric))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_derivative() {
        let g = central_difference(|x| x[0] * x[0] + 3.0 * x[1], &[2.0, -1.0], 1e-3);
        assert!((g[0] - 4.0).abs() < 1e-9);
        assert!((g[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn relative_error_of_equal_vectors_is_zero() {
        assert_eq!(relative_error(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert!(relative_error(&[1.0, 0.0], &[0.0, 1.0]) > 1.0);
    }
}
