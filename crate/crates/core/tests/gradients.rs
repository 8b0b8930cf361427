#[allow(dead_code)]
mod support {
    pub mod gradient_suite;
}

use eat_core::model::{IntegratedHead, LossTarget};
use eat_core::{Mode, Tape, Tensor};
use support::gradient_suite::*;

#[test]
fn every_op_matches_finite_differences() {
    for case in op_cases() {
        for (seed, err) in case.errors().into_iter().enumerate() {
            assert!(err < OP_TOL, "{} instance {seed}: relative error {err:e}", case.name);
        }
    }
}

#[test]
fn op_catalogue_covers_each_operation() {
    let names: Vec<String> = op_cases().into_iter().map(|c| c.name).collect();
    for op in [
        "add", "sub", "mul", "scale", "matmul", "conv2d", "relu", "maxpool", "avgpool", "softmax", "log", "sum",
        "mean", "index", "concat", "stack", "reshape",
    ] {
        assert!(names.iter().any(|n| n.starts_with(op)), "{op} has no gradient case");
    }
}

#[test]
fn detach_blocks_gradient() {
    let mut tape = Tape::<f64>::new();
    let x = tape.param(Tensor::from_f64([2], &[1.0, 2.0]).unwrap());
    let d = tape.detach(x);
    let y = tape.mul(x, d).unwrap();
    let s = tape.sum(y);
    tape.backward(s).unwrap();
    // only the non-detached factor contributes: d/dx (x · const) = const
    assert_eq!(tape.grad(x).unwrap().data(), &[1.0, 2.0]);
}

#[test]
fn end_to_end_eat_model() {
    for seed in 0..INSTANCES {
        let err = model_error(micro_config(seed), seed);
        assert!(err < MODEL_TOL, "instance {seed}: relative error {err:e}");
    }
}

#[test]
fn end_to_end_variants() {
    for seed in 0..5 {
        let mut linear = micro_config(seed);
        linear.integrated_head = IntegratedHead::Linear;
        let mut baseline = micro_config(seed);
        baseline.mode = Mode::Baseline;
        let mut integrated = micro_config(seed);
        integrated.loss_target = LossTarget::Integrated;
        for cfg in [linear, baseline, integrated] {
            let err = model_error(cfg.clone(), seed);
            assert!(err < MODEL_TOL, "{cfg:?}: relative error {err:e}");
        }
    }
}
