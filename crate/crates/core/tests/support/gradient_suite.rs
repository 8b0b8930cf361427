//! Gradient-check cases shared by the gradient tests and the acceptance run.

use eat_core::gradcheck::{model_gradient_error, tape_gradient_error};
use eat_core::{EatConfig, EatModel, Result, Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const INSTANCES: u64 = 20;
pub const OP_STEP: f64 = 1e-3;
pub const OP_TOL: f64 = 1e-4;
/// The micro-model has dozens of ReLUs; a smaller probe keeps every one of
/// them on the same side of its kink.
pub const MODEL_STEP: f64 = 1e-5;
pub const MODEL_TOL: f64 = 1e-3;

type Make = Box<dyn Fn(&mut ChaCha8Rng) -> Vec<Tensor<f64>>>;
type Build = Box<dyn Fn(&mut Tape<f64>, &[Var]) -> Result<Var>>;

pub struct OpCase {
    pub name: String,
    make: Make,
    build: Build,
}

impl OpCase {
    fn new(
        name: impl Into<String>,
        make: impl Fn(&mut ChaCha8Rng) -> Vec<Tensor<f64>> + 'static,
        build: impl Fn(&mut Tape<f64>, &[Var]) -> Result<Var> + 'static,
    ) -> Self {
        OpCase {
            name: name.into(),
            make: Box::new(make),
            build: Box::new(build),
        }
    }

    /// Relative error of every seeded instance.
    pub fn errors(&self) -> Vec<f64> {
        (0..INSTANCES)
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let inputs = (self.make)(&mut rng);
                tape_gradient_error(&inputs, &self.build, OP_STEP).unwrap()
            })
            .collect()
    }
}

pub fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Values bounded away from zero so no finite-difference probe crosses a kink.
fn away_from_zero(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    random(rng, shape).map(|v| if v >= 0.0 { v + 0.05 } else { v - 0.05 })
}

/// Distinct values in random order, spaced well beyond the probe step.
fn distinct(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    let mut vals: Vec<f64> = (0..n).map(|i| i as f64 * 0.01 - 0.3).collect();
    for i in (1..n).rev() {
        vals.swap(i, rng.gen_range(0..=i));
    }
    Tensor::new(shape.to_vec(), vals).unwrap()
}

fn dims(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    rng.gen_range(lo..=hi)
}

fn broadcast_pair(rng: &mut ChaCha8Rng) -> Vec<Tensor<f64>> {
    let (a, b) = (dims(rng, 1, 4), dims(rng, 1, 5));
    vec![random(rng, &[a, b]), random(rng, &[1, b])]
}

/// One case per differentiable operation, plus variants for broadcasting
/// and convolution geometry.
pub fn op_cases() -> Vec<OpCase> {
    let mut cases = vec![
        OpCase::new("add", broadcast_pair, |t, v| t.add(v[0], v[1])),
        OpCase::new("sub", broadcast_pair, |t, v| t.sub(v[0], v[1])),
        OpCase::new("mul", broadcast_pair, |t, v| t.mul(v[0], v[1])),
        OpCase::new(
            "mul same shape",
            |rng| vec![random(rng, &[3, 2]), random(rng, &[3, 2])],
            |t, v| t.mul(v[0], v[1]),
        ),
        OpCase::new("scale", |rng| vec![random(rng, &[4])], |t, v| Ok(t.scale(v[0], -2.5))),
        OpCase::new(
            "matmul",
            |rng| {
                let (m, k, n) = (dims(rng, 1, 4), dims(rng, 1, 5), dims(rng, 1, 3));
                vec![random(rng, &[m, k]), random(rng, &[k, n])]
            },
            |t, v| t.matmul(v[0], v[1]),
        ),
    ];
    for (stride, pad, k) in [(1, 0, 3), (1, 1, 3), (2, 1, 3), (2, 0, 1), (3, 2, 3)] {
        cases.push(OpCase::new(
            format!("conv2d s{stride} p{pad} k{k}"),
            move |rng| {
                let (c_in, c_out, h, w) = (dims(rng, 1, 3), dims(rng, 1, 3), dims(rng, 3, 6), dims(rng, 3, 6));
                vec![random(rng, &[c_in, h, w]), random(rng, &[c_out, c_in, k, k])]
            },
            move |t, v| t.conv2d(v[0], v[1], stride, pad),
        ));
    }
    cases.extend([
        OpCase::new("relu", |rng| vec![away_from_zero(rng, &[2, 3, 3])], |t, v| Ok(t.relu(v[0]))),
        OpCase::new("maxpool", |rng| vec![distinct(rng, &[2, 4, 6])], |t, v| t.maxpool2d(v[0], 2, 2)),
        OpCase::new(
            "maxpool overlapping",
            |rng| vec![distinct(rng, &[1, 5, 5])],
            |t, v| t.maxpool2d(v[0], 3, 1),
        ),
        OpCase::new("avgpool", |rng| vec![random(rng, &[3, 2, 4])], |t, v| t.avgpool_global(v[0])),
        OpCase::new(
            "softmax",
            |rng| {
                let n = dims(rng, 2, 6);
                vec![random(rng, &[n])]
            },
            |t, v| t.softmax(v[0]),
        ),
        OpCase::new("softmax rows", |rng| vec![random(rng, &[3, 4])], |t, v| t.softmax(v[0])),
        OpCase::new(
            "log",
            |rng| vec![random(rng, &[5]).map(|x| x.abs() + 0.2)],
            |t, v| Ok(t.log_clamped(v[0], 1e-12)),
        ),
        OpCase::new("sum", |rng| vec![random(rng, &[2, 3])], |t, v| Ok(t.sum(v[0]))),
        OpCase::new("mean", |rng| vec![random(rng, &[2, 3])], |t, v| Ok(t.mean(v[0]))),
        OpCase::new("index", |rng| vec![random(rng, &[2, 3])], |t, v| t.index(v[0], 4)),
        OpCase::new(
            "concat axis 0",
            |rng| vec![random(rng, &[2, 3]), random(rng, &[1, 3])],
            |t, v| t.concat(&[v[0], v[1]], 0),
        ),
        OpCase::new(
            "concat axis 1",
            |rng| vec![random(rng, &[2, 3]), random(rng, &[2, 1])],
            |t, v| t.concat(&[v[0], v[1]], 1),
        ),
        OpCase::new("stack", |rng| vec![random(rng, &[]), random(rng, &[])], |t, v| t.stack(&[v[0], v[1]])),
        OpCase::new("reshape", |rng| vec![random(rng, &[2, 3])], |t, v| t.reshape(v[0], [3, 2])),
    ]);
    cases
}

/// Three classes, two attributes, 8×8 input.
pub fn micro_config(seed: u64) -> EatConfig {
    EatConfig {
        n_classes: 3,
        n_attributes: 2,
        d_e: 4,
        image_size: 8,
        trunk_channels: vec![3, 4],
        trunk_strides: vec![2, 2],
        head_channels: 3,
        integrated_channels: 2,
        lambda: 0.8,
        eta: 1.2,
        seed,
        ..EatConfig::default()
    }
}

/// Relative error of the full training-loss gradient for one seeded model,
/// input and label.
pub fn model_error(cfg: EatConfig, seed: u64) -> f64 {
    let mut model: EatModel<f64> = EatModel::<f32>::new(cfg).unwrap().cast();
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 1000);
    // Fresh models have zero biases, which puts some ReLU inputs exactly on
    // the kink; jitter every parameter so the loss is smooth near the probe.
    for t in model.params_mut().tensors_mut() {
        for v in t.data_mut() {
            *v += rng.gen_range(-0.1..0.1);
        }
    }
    let x = random(&mut rng, &[3, 8, 8]).map(|v| 0.5 + 0.5 * v);
    let label = rng.gen_range(0..3);
    let attrs = [rng.gen_range(0..2u8), rng.gen_range(0..2u8)];
    model_gradient_error(&model, &x, label, &attrs, MODEL_STEP).unwrap()
}
