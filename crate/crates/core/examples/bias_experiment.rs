//! Trains a baseline and an attribute model on the biased synthetic set and
//! compares test accuracy, attribute accuracy and mean FAR.
//!
//! ```text
//! cargo run --release -p eat-core --example bias_experiment -- [seed] [epochs]
//! ```

use std::time::Instant;

use eat_core::data::{synth_generate, Split, SynthSpec};
use eat_core::far::{far_batch, FarOptions};
use eat_core::train::{evaluate, train, TrainConfig};
use eat_core::{EatConfig, EatModel, Mode};

fn main() -> eat_core::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse().expect("seed")).unwrap_or(0);
    let epochs: usize = args.next().map(|s| s.parse().expect("epochs")).unwrap_or(30);
    let lr: f64 = args.next().map(|s| s.parse().expect("lr")).unwrap_or(0.01);
    let bias_train = std::env::var("BIAS").map(|b| b.parse().expect("bias")).unwrap_or(0.95);
    let image_size = std::env::var("IMAGE").map(|b| b.parse().expect("image size")).unwrap_or(32);
    let ds = synth_generate(&SynthSpec {
        seed,
        bias_train,
        image_size,
        ..SynthSpec::default()
    })?
    .dataset;
    let train_set = ds.split(Split::Train);
    let test_set = ds.split(Split::Test);
    let modes: Vec<Mode> = std::env::var("MODES")
        .unwrap_or_else(|_| "baseline,eat".into())
        .split(',')
        .map(|m| m.parse().expect("mode"))
        .collect();
    for mode in modes {
        let start = Instant::now();
        let mut config = EatConfig {
            mode,
            seed,
            image_size,
            ..EatConfig::default()
        };
        for (key, value) in std::env::vars() {
            if let Some(key) = key.strip_prefix("EAT_CFG_") {
                config.set(&key.to_lowercase(), &value)?;
            }
        }
        let mut model = EatModel::new(config)?;
        let batch_size = std::env::var("BATCH").map(|b| b.parse().expect("batch")).unwrap_or(16);
        let cfg = TrainConfig {
            epochs,
            lr,
            seed,
            batch_size,
            ..TrainConfig::default()
        };
        train(&mut model, &train_set, &cfg, |r| {
            eprintln!("  {mode} epoch {} l_c={:.3} l_a={:?} acc={:.3}", r.epoch, r.l_c, r.l_a, r.accuracy)
        })?;
        let eval = evaluate(&model, &test_set, 1)?;
        let opts = FarOptions {
            layer: model.config().trunk_channels.len() - 1,
            correct_only: false,
            threads: 1,
        };
        let far = far_batch(&model, &test_set, &mode.to_string(), opts)?;
        println!(
            "{mode}: test acc {:.3} attr acc {:?} mean FAR {:.3} in {:.1}s",
            eval.accuracy,
            eval.attr_accuracy,
            far.mean_far,
            start.elapsed().as_secs_f64()
        );
        let n = model.config().n_classes;
        let mut confusion = vec![vec![0usize; n]; n];
        for p in &eval.predictions {
            confusion[p.label][p.predicted] += 1;
        }
        for row in &confusion {
            println!("  {row:?}");
        }
        if model.config().attributes_enabled() {
            for j in 0..model.config().n_attributes {
                let hits = test_set
                    .iter()
                    .zip(&eval.predictions)
                    .filter(|(s, p)| (p.attribute_probs[j] > 0.5) == (s.attributes[j] == 1))
                    .count();
                print!(" a{j}={:.2}", hits as f64 / test_set.len() as f64);
            }
            println!();
        }
        for layer in 0..opts.layer {
            let r = far_batch(&model, &test_set, &mode.to_string(), FarOptions { layer, ..opts })?;
            println!("  layer {layer}: mean FAR {:.3}", r.mean_far);
        }
    }
    Ok(())
}
