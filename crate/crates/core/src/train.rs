//! Minibatch training and evaluation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::dataset::Sample;
use crate::error::{Error, Result};
use crate::model::EatModel;
use crate::nn::Sgd;
use crate::parallel;
use crate::tape::Tape;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Seed of the per-epoch shuffle.
    pub seed: u64,
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.01,
            momentum: 0.9,
            epochs: 30,
            batch_size: 16,
            seed: 0,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::InvalidArgument(format!("learning rate must be positive, got {}", self.lr)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument(format!("momentum must be in [0, 1), got {}", self.momentum)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Training-set statistics of one epoch, gathered from the forward passes
/// of that epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    pub l_c: f64,
    /// Absent when the model has no attribute heads.
    pub l_a: Option<f64>,
    pub accuracy: f64,
    pub attr_accuracy: Option<f64>,
}

struct SampleStep {
    grads: Vec<Option<Tensor<f32>>>,
    l_c: f64,
    l_a: Option<f64>,
    correct: bool,
    attr_hits: Vec<bool>,
}

fn sample_step(model: &EatModel<f32>, s: &Sample) -> Result<SampleStep> {
    let mut fwd = model.forward(Tape::new(), &s.image)?;
    let loss = model.loss(&mut fwd, s.label, &s.attributes)?;
    let total = fwd.value(loss.total).item()? as f64;
    if !total.is_finite() {
        return Err(Error::NonFinite(format!("loss on {} is {total}", s.image_id)));
    }
    let l_c = fwd.value(loss.l_c).item()? as f64;
    let l_a = match loss.l_a {
        Some(v) => Some(fwd.value(v).item()? as f64),
        None => None,
    };
    let correct = fwd.predicted_class() == s.label;
    let attr_hits = fwd
        .attribute_probs()
        .iter()
        .zip(&s.attributes)
        .map(|(&p, &gt)| (p > 0.5) == (gt == 1))
        .collect();
    fwd.tape.backward(loss.total)?;
    Ok(SampleStep {
        grads: fwd.take_param_grads(),
        l_c,
        l_a,
        correct,
        attr_hits,
    })
}

/// Trains `model` in place with SGD and momentum. Gradients are averaged
/// over each minibatch; samples within a batch may be processed on
/// `cfg.threads` workers without changing the result. `on_epoch` sees every
/// report as soon as its epoch finishes.
pub fn train(
    model: &mut EatModel<f32>,
    samples: &[&Sample],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochReport),
) -> Result<Vec<EpochReport>> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no training samples".into()));
    }
    let mut opt = Sgd::new(model.params(), cfg.lr as f32, cfg.momentum as f32);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let attrs = model.config().attributes_enabled();
    let n_attr = model.config().n_attributes;
    let mut reports = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let (mut sum_c, mut sum_a, mut correct) = (0.0, 0.0, 0usize);
        let mut attr_hits = vec![0usize; n_attr];
        for batch in order.chunks(cfg.batch_size) {
            let steps = {
                let m = &*model;
                let batch: Vec<&Sample> = batch.iter().map(|&i| samples[i]).collect();
                parallel::map_ordered(&batch, cfg.threads, |s| sample_step(m, s))
            };
            let mut acc: Vec<Option<Tensor<f32>>> = vec![None; model.params().len()];
            let scale = 1.0 / batch.len() as f32;
            for step in steps {
                let step = step.map_err(|e| match e {
                    Error::NonFinite(msg) => Error::NonFinite(format!("epoch {epoch}: {msg}")),
                    other => other,
                })?;
                sum_c += step.l_c;
                sum_a += step.l_a.unwrap_or(0.0);
                correct += usize::from(step.correct);
                for (h, hit) in attr_hits.iter_mut().zip(&step.attr_hits) {
                    *h += usize::from(*hit);
                }
                for (slot, g) in acc.iter_mut().zip(step.grads) {
                    let Some(g) = g else { continue };
                    match slot {
                        Some(total) => {
                            for (t, v) in total.data_mut().iter_mut().zip(g.data()) {
                                *t += v * scale;
                            }
                        }
                        None => *slot = Some(g.map(|v| v * scale)),
                    }
                }
            }
            opt.step(model.params_mut(), &acc);
        }
        let n = samples.len() as f64;
        let report = EpochReport {
            epoch,
            l_c: sum_c / n,
            l_a: attrs.then_some(sum_a / n),
            accuracy: correct as f64 / n,
            attr_accuracy: attrs.then(|| attr_hits.iter().map(|&h| h as f64 / n).sum::<f64>() / n_attr as f64),
        };
        log::info!(
            "epoch {epoch}: l_c={:.4} acc={:.4}{}",
            report.l_c,
            report.accuracy,
            report.l_a.map(|l| format!(" l_a={l:.4}")).unwrap_or_default()
        );
        on_epoch(&report);
        reports.push(report);
    }
    Ok(reports)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub image_id: String,
    pub label: usize,
    pub predicted: usize,
    pub attribute_probs: Vec<f32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    /// Mean over attributes of the per-attribute accuracy, thresholding the
    /// presence probability at 0.5.
    pub attr_accuracy: Option<f64>,
    pub predictions: Vec<Prediction>,
}

pub fn evaluate(model: &EatModel<f32>, samples: &[&Sample], threads: usize) -> Result<EvalReport> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples to evaluate".into()));
    }
    let results = parallel::map_ordered(samples, threads, |s| model.predict(&s.image));
    let mut predictions = Vec::with_capacity(samples.len());
    for (s, r) in samples.iter().zip(results) {
        let (predicted, attribute_probs, _) = r?;
        predictions.push(Prediction {
            image_id: s.image_id.clone(),
            label: s.label,
            predicted,
            attribute_probs,
        });
    }
    let n = samples.len() as f64;
    let accuracy = predictions.iter().filter(|p| p.label == p.predicted).count() as f64 / n;
    let n_attr = model.config().n_attributes;
    let attr_accuracy = model.config().attributes_enabled().then(|| {
        (0..n_attr)
            .map(|j| {
                let hits = samples
                    .iter()
                    .zip(&predictions)
                    .filter(|(s, p)| (p.attribute_probs[j] > 0.5) == (s.attributes[j] == 1))
                    .count();
                hits as f64 / n
            })
            .sum::<f64>()
            / n_attr as f64
    });
    Ok(EvalReport {
        accuracy,
        attr_accuracy,
        predictions,
    })
}
