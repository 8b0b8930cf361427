//! The attribute-based multi-task classifier.
//!
//! A shared convolutional trunk produces the image feature `v_img`. Two
//! families of heads read that same feature: a category head producing the
//! preliminary logits `c_p`, and one binary head per attribute. The predicted
//! attribute presences are embedded row by row (`E_a`), the preliminary
//! logits are embedded into one more row (`E_p`), and a small CNN over the
//! stacked embedding grid `E` yields the integrated logits `c_i`. The final
//! prediction is `c = λ·c_p + η·c_i`.
//!
//! Training minimises `λ·l_c + η·l_a`, where `l_c` is the cross entropy of
//! the softmaxed fused logits against the class label and `l_a` is the mean
//! cross entropy of the attribute heads against the class-attribute row.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::nn::{self, Bound, LayerParams, ParamSpec};
use crate::scalar::Scalar;
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// Whether attribute supervision is part of the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Trunk and category head only; `η` is forced to zero.
    Baseline,
    Eat,
}

/// Which logits the category loss `l_c` is computed on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossTarget {
    Fused,
    Integrated,
}

/// Architecture of the integrated classifier over the embedding grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegratedHead {
    /// Two conv blocks over the `(N_a+1)×D_e` grid, then a linear layer.
    Cnn,
    /// A single linear map over the flattened grid.
    Linear,
}

macro_rules! keyword_enum {
    ($ty:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($ty::$variant => $text),+ })
            }
        }

        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($ty::$variant),)+
                    other => Err(Error::InvalidArgument(format!(
                        concat!("unknown ", stringify!($ty), " `{}`"), other
                    ))),
                }
            }
        }
    };
}

keyword_enum!(Mode { Baseline => "baseline", Eat => "eat" });
keyword_enum!(LossTarget { Fused => "fused", Integrated => "integrated" });
keyword_enum!(IntegratedHead { Cnn => "cnn", Linear => "linear" });

/// Model hyperparameters. Serialised as `key=value` lines by
/// [`EatConfig::to_pairs`] and read back through [`EatConfig::set`].
#[derive(Clone, Debug, PartialEq)]
pub struct EatConfig {
    pub n_classes: usize,
    pub n_attributes: usize,
    pub d_e: usize,
    pub lambda: f64,
    pub eta: f64,
    pub image_size: usize,
    pub trunk_channels: Vec<usize>,
    pub trunk_strides: Vec<usize>,
    pub head_channels: usize,
    pub integrated_channels: usize,
    pub integrated_head: IntegratedHead,
    pub mode: Mode,
    pub loss_target: LossTarget,
    pub detach_cp: bool,
    pub seed: u64,
}

impl Default for EatConfig {
    fn default() -> Self {
        EatConfig {
            n_classes: 8,
            n_attributes: 6,
            d_e: 16,
            lambda: 1.0,
            eta: 1.0,
            image_size: 32,
            trunk_channels: vec![16, 32, 64, 64],
            trunk_strides: vec![2, 2, 2, 2],
            head_channels: 16,
            integrated_channels: 8,
            integrated_head: IntegratedHead::Cnn,
            mode: Mode::Eat,
            loss_target: LossTarget::Fused,
            detach_cp: false,
            seed: 0,
        }
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("{key}: `{value}` is not a list of integers")))
        })
        .collect()
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("{key}: cannot parse `{value}`")))
}

fn join(list: &[usize]) -> String {
    list.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl EatConfig {
    pub const KEYS: &'static [&'static str] = &[
        "n_classes",
        "n_attributes",
        "d_e",
        "lambda",
        "eta",
        "image_size",
        "trunk_channels",
        "trunk_strides",
        "head_channels",
        "integrated_channels",
        "integrated_head",
        "mode",
        "loss_target",
        "detach_cp",
        "seed",
    ];

    /// Effective `η`: zero in baseline mode.
    pub fn effective_eta(&self) -> f64 {
        match self.mode {
            Mode::Baseline => 0.0,
            Mode::Eat => self.eta,
        }
    }

    pub fn attributes_enabled(&self) -> bool {
        self.mode == Mode::Eat
    }

    /// Sets one field from its textual form. Returns `Ok(false)` for keys
    /// that are not model settings.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "n_classes" => self.n_classes = parse_value(key, value)?,
            "n_attributes" => self.n_attributes = parse_value(key, value)?,
            "d_e" => self.d_e = parse_value(key, value)?,
            "lambda" => self.lambda = parse_value(key, value)?,
            "eta" => self.eta = parse_value(key, value)?,
            "image_size" => self.image_size = parse_value(key, value)?,
            "trunk_channels" => self.trunk_channels = parse_list(key, value)?,
            "trunk_strides" => self.trunk_strides = parse_list(key, value)?,
            "head_channels" => self.head_channels = parse_value(key, value)?,
            "integrated_channels" => self.integrated_channels = parse_value(key, value)?,
            "integrated_head" => self.integrated_head = value.trim().parse()?,
            "mode" => self.mode = value.trim().parse()?,
            "loss_target" => self.loss_target = value.trim().parse()?,
            "detach_cp" => self.detach_cp = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Every field as `(key, value)` in [`EatConfig::KEYS`] order. Floats use
    /// Rust's shortest round-tripping representation.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("n_classes", self.n_classes.to_string()),
            ("n_attributes", self.n_attributes.to_string()),
            ("d_e", self.d_e.to_string()),
            ("lambda", format!("{:?}", self.lambda)),
            ("eta", format!("{:?}", self.eta)),
            ("image_size", self.image_size.to_string()),
            ("trunk_channels", join(&self.trunk_channels)),
            ("trunk_strides", join(&self.trunk_strides)),
            ("head_channels", self.head_channels.to_string()),
            ("integrated_channels", self.integrated_channels.to_string()),
            ("integrated_head", self.integrated_head.to_string()),
            ("mode", self.mode.to_string()),
            ("loss_target", self.loss_target.to_string()),
            ("detach_cp", self.detach_cp.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }

    /// Spatial size after each trunk block.
    pub fn trunk_sizes(&self) -> Vec<usize> {
        let mut size = self.image_size;
        self.trunk_strides
            .iter()
            .map(|&s| {
                size = (size + 2 - 3) / s + 1;
                size
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n_classes < 2 {
            return bad(format!("n_classes must be at least 2, got {}", self.n_classes));
        }
        if self.n_attributes < 1 {
            return bad("n_attributes must be at least 1".into());
        }
        if self.d_e < 2 {
            return bad(format!("d_e must be at least 2, got {}", self.d_e));
        }
        if self.trunk_channels.is_empty() || self.trunk_channels.len() != self.trunk_strides.len() {
            return bad("trunk_channels and trunk_strides must be non-empty and of equal length".into());
        }
        if self.trunk_channels.iter().chain(&self.trunk_strides).any(|&v| v == 0)
            || self.head_channels == 0
            || self.integrated_channels == 0
        {
            return bad("channel counts and strides must be positive".into());
        }
        if self.image_size < 2 {
            return bad(format!("image_size {} too small", self.image_size));
        }
        if !self.lambda.is_finite() || !self.eta.is_finite() {
            return bad("lambda and eta must be finite".into());
        }
        Ok(())
    }

    fn warn_unusual_weights(&self) {
        for (name, v) in [("lambda", self.lambda), ("eta", self.effective_eta())] {
            if !(0.5..=1.5).contains(&v) && !(self.mode == Mode::Baseline && name == "eta") {
                log::warn!("{name} = {v} lies outside the usual range [0.5, 1.5]");
            }
        }
    }
}

/// Values of one forward pass, detached from the tape.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardOutputs {
    pub v_img: Tensor<f32>,
    pub c_p: Tensor<f32>,
    /// Presence probability per attribute; absent in baseline mode.
    pub a: Option<Tensor<f32>>,
    pub e_a: Option<Tensor<f32>>,
    pub e_p: Option<Tensor<f32>>,
    pub e: Option<Tensor<f32>>,
    pub c_i: Option<Tensor<f32>>,
    pub c: Tensor<f32>,
}

/// Handles to the interesting nodes of one forward pass.
pub struct Forward<'m, F: Scalar> {
    pub tape: Tape<F>,
    params: Bound<'m, F>,
    /// Activation map after every trunk block; the last one is `v_img`.
    pub trunk: Vec<Var>,
    pub v_img: Var,
    pub c_p: Var,
    /// Two logits (absent, present) per attribute.
    pub attr_logits: Vec<Var>,
    pub a: Option<Var>,
    pub e_a: Option<Var>,
    pub e_p: Option<Var>,
    pub e: Option<Var>,
    pub c_i: Option<Var>,
    pub c: Var,
}

/// Loss nodes produced by [`EatModel::loss`].
#[derive(Clone, Copy, Debug)]
pub struct LossVars {
    pub total: Var,
    pub l_c: Var,
    pub l_a: Option<Var>,
}

impl<'m, F: Scalar> Forward<'m, F> {
    pub fn value(&self, v: Var) -> &Tensor<F> {
        self.tape.value(v)
    }

    /// Gradients for every model parameter after backward, in store order.
    pub fn take_param_grads(&mut self) -> Vec<Option<Tensor<F>>> {
        self.params.take_grads(&mut self.tape)
    }

    pub fn param_var(&self, name: &str) -> Option<Var> {
        self.params.bound_var(name)
    }

    pub fn outputs(&self) -> ForwardOutputs {
        let get = |v: Var| self.tape.value(v).cast::<f32>();
        ForwardOutputs {
            v_img: get(self.v_img),
            c_p: get(self.c_p),
            a: self.a.map(get),
            e_a: self.e_a.map(get),
            e_p: self.e_p.map(get),
            e: self.e.map(get),
            c_i: self.c_i.map(get),
            c: get(self.c),
        }
    }

    pub fn predicted_class(&self) -> usize {
        self.tape.value(self.c).argmax()
    }

    /// Presence probabilities, or an empty vector in baseline mode.
    pub fn attribute_probs(&self) -> Vec<f32> {
        self.a
            .map(|a| self.tape.value(a).data().iter().map(|v| v.as_f64() as f32).collect())
            .unwrap_or_default()
    }
}

/// Pixel values are shifted from `[0, 1]` to `[-0.5, 0.5]` before the trunk.
fn center<F: Scalar>(x: &Tensor<F>) -> Tensor<F> {
    let half = F::of(0.5);
    x.map(|v| v - half)
}

/// Parameters plus configuration of the classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct EatModel<F = f32> {
    config: EatConfig,
    params: LayerParams<F>,
}

fn conv_specs(specs: &mut Vec<ParamSpec>, prefix: &str, c_in: usize, c_out: usize) {
    specs.push(ParamSpec::relu_uniform(format!("{prefix}.weight"), [c_out, c_in, 3, 3], c_in * 9));
    specs.push(ParamSpec::zeros(format!("{prefix}.bias"), [c_out]));
}

fn linear_specs(specs: &mut Vec<ParamSpec>, prefix: &str, d_in: usize, d_out: usize) {
    specs.push(ParamSpec::uniform(format!("{prefix}.weight"), [d_in, d_out], d_in, d_out));
    specs.push(ParamSpec::zeros(format!("{prefix}.bias"), [d_out]));
}

/// Parameter layout of a model built from `cfg`.
pub fn param_specs(cfg: &EatConfig) -> Vec<ParamSpec> {
    let mut specs = Vec::new();
    let mut c_in = 3;
    for (l, &c) in cfg.trunk_channels.iter().enumerate() {
        conv_specs(&mut specs, &format!("trunk.{l}"), c_in, c);
        c_in = c;
    }
    let v_channels = c_in;
    let hc = cfg.head_channels;
    let head = |specs: &mut Vec<ParamSpec>, prefix: &str, out: usize| {
        conv_specs(specs, &format!("{prefix}.conv0"), v_channels, hc);
        conv_specs(specs, &format!("{prefix}.conv1"), hc, hc);
        linear_specs(specs, &format!("{prefix}.fc"), hc, out);
    };
    head(&mut specs, "category_head", cfg.n_classes);
    for i in 0..cfg.n_attributes {
        head(&mut specs, &format!("attr_head.{i}"), 2);
    }
    specs.push(ParamSpec::uniform("emb_a.u", [cfg.n_attributes, cfg.d_e], 1, cfg.d_e));
    specs.push(ParamSpec::zeros("emb_a.b", [cfg.n_attributes, cfg.d_e]));
    linear_specs(&mut specs, "emb_p", cfg.n_classes, cfg.d_e);
    let grid = (cfg.n_attributes + 1) * cfg.d_e;
    match cfg.integrated_head {
        IntegratedHead::Cnn => {
            let gc = cfg.integrated_channels;
            conv_specs(&mut specs, "integrated.conv0", 1, gc);
            conv_specs(&mut specs, "integrated.conv1", gc, gc);
            linear_specs(&mut specs, "integrated.fc", gc * grid, cfg.n_classes);
        }
        IntegratedHead::Linear => linear_specs(&mut specs, "integrated.linear", grid, cfg.n_classes),
    }
    specs
}

impl<F: Scalar> EatModel<F> {
    /// A freshly initialised model, fully determined by `config.seed`.
    pub fn new(config: EatConfig) -> Result<Self> {
        config.validate()?;
        config.warn_unusual_weights();
        let params = nn::init_params(&param_specs(&config), config.seed)?;
        Ok(EatModel { config, params })
    }

    /// Reassembles a model from stored parameters, checking that names and
    /// shapes match the layout `config` implies.
    pub fn from_params(config: EatConfig, params: LayerParams<F>) -> Result<Self> {
        config.validate()?;
        let specs = param_specs(&config);
        if specs.len() != params.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} parameter tensors, found {}",
                specs.len(),
                params.len()
            )));
        }
        for spec in &specs {
            match params.get(&spec.name) {
                Some(t) if t.shape() == spec.shape.as_slice() => {}
                Some(t) => {
                    return Err(Error::ShapeMismatch {
                        op: "from_params",
                        lhs: spec.shape.clone(),
                        rhs: t.shape().to_vec(),
                    })
                }
                None => return Err(Error::InvalidArgument(format!("missing parameter {}", spec.name))),
            }
        }
        Ok(EatModel { config, params })
    }

    pub fn config(&self) -> &EatConfig {
        &self.config
    }

    /// Changes fusion weights or switches without touching parameters.
    pub fn config_mut(&mut self) -> &mut EatConfig {
        &mut self.config
    }

    pub fn params(&self) -> &LayerParams<F> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut LayerParams<F> {
        &mut self.params
    }

    pub fn cast<G: Scalar>(&self) -> EatModel<G> {
        EatModel {
            config: self.config.clone(),
            params: self.params.cast(),
        }
    }

    fn check_image(&self, x: &Tensor<F>) -> Result<()> {
        let s = self.config.image_size;
        if x.shape() != [3, s, s] {
            return Err(Error::ShapeMismatch {
                op: "forward",
                lhs: vec![3, s, s],
                rhs: x.shape().to_vec(),
            });
        }
        if !x.is_finite() {
            return Err(Error::NonFinite("input image".into()));
        }
        Ok(())
    }

    fn trunk_forward(&self, tape: &mut Tape<F>, p: &mut Bound<'_, F>, x: Var) -> Result<Vec<Var>> {
        let mut h = x;
        let mut acts = Vec::with_capacity(self.config.trunk_channels.len());
        for (l, &stride) in self.config.trunk_strides.iter().enumerate() {
            let w = p.var(tape, &format!("trunk.{l}.weight"))?;
            let b = p.var(tape, &format!("trunk.{l}.bias"))?;
            h = nn::conv_block(tape, h, w, b, stride, 1)?;
            acts.push(h);
        }
        Ok(acts)
    }

    fn head_forward(tape: &mut Tape<F>, p: &mut Bound<'_, F>, prefix: &str, v: Var) -> Result<Var> {
        let mut h = v;
        for conv in ["conv0", "conv1"] {
            let w = p.var(tape, &format!("{prefix}.{conv}.weight"))?;
            let b = p.var(tape, &format!("{prefix}.{conv}.bias"))?;
            h = nn::conv_block(tape, h, w, b, 1, 1)?;
        }
        let pooled = tape.avgpool_global(h)?;
        let w = p.var(tape, &format!("{prefix}.fc.weight"))?;
        let b = p.var(tape, &format!("{prefix}.fc.bias"))?;
        nn::linear(tape, pooled, w, b)
    }

    /// Runs the model on one `3×H×W` image, recording on `tape`. When the
    /// tape records, `E_a` is retained so its gradient is available after
    /// backward.
    pub fn forward(&self, mut tape: Tape<F>, x: &Tensor<F>) -> Result<Forward<'_, F>> {
        self.check_image(x)?;
        let cfg = &self.config;
        let mut p = Bound::new(&self.params);
        let input = tape.constant(center(x));
        let trunk = self.trunk_forward(&mut tape, &mut p, input)?;
        let v_img = *trunk.last().expect("non-empty trunk");
        let c_p = Self::head_forward(&mut tape, &mut p, "category_head", v_img)?;
        let lambda = F::of(cfg.lambda);

        if !cfg.attributes_enabled() {
            let c = tape.scale(c_p, lambda);
            return Ok(Forward {
                tape,
                params: p,
                trunk,
                v_img,
                c_p,
                attr_logits: Vec::new(),
                a: None,
                e_a: None,
                e_p: None,
                e: None,
                c_i: None,
                c,
            });
        }

        let mut attr_logits = Vec::with_capacity(cfg.n_attributes);
        let mut presence = Vec::with_capacity(cfg.n_attributes);
        for i in 0..cfg.n_attributes {
            let logits = Self::head_forward(&mut tape, &mut p, &format!("attr_head.{i}"), v_img)?;
            let probs = tape.softmax(logits)?;
            presence.push(tape.index(probs, 1)?);
            attr_logits.push(logits);
        }
        let a = tape.stack(&presence)?;

        // E_a row i = a_i·u_i + b_i
        let u = p.var(&mut tape, "emb_a.u")?;
        let b = p.var(&mut tape, "emb_a.b")?;
        let a_col = tape.reshape(a, [cfg.n_attributes, 1])?;
        let scaled = tape.mul(u, a_col)?;
        let e_a = tape.add(scaled, b)?;
        if tape.is_recording() {
            tape.retain(e_a);
        }

        let cp_in = if cfg.detach_cp { tape.detach(c_p) } else { c_p };
        let w = p.var(&mut tape, "emb_p.weight")?;
        let bias = p.var(&mut tape, "emb_p.bias")?;
        let e_p_vec = nn::linear(&mut tape, cp_in, w, bias)?;
        let e_p = tape.reshape(e_p_vec, [1, cfg.d_e])?;
        let e = tape.concat(&[e_a, e_p], 0)?;

        let rows = cfg.n_attributes + 1;
        let c_i = match cfg.integrated_head {
            IntegratedHead::Cnn => {
                let mut h = tape.reshape(e, [1, rows, cfg.d_e])?;
                for conv in ["conv0", "conv1"] {
                    let w = p.var(&mut tape, &format!("integrated.{conv}.weight"))?;
                    let b = p.var(&mut tape, &format!("integrated.{conv}.bias"))?;
                    h = nn::conv_block(&mut tape, h, w, b, 1, 1)?;
                }
                let n = tape.value(h).numel();
                let flat = tape.reshape(h, [n])?;
                let w = p.var(&mut tape, "integrated.fc.weight")?;
                let b = p.var(&mut tape, "integrated.fc.bias")?;
                nn::linear(&mut tape, flat, w, b)?
            }
            IntegratedHead::Linear => {
                let flat = tape.reshape(e, [rows * cfg.d_e])?;
                let w = p.var(&mut tape, "integrated.linear.weight")?;
                let b = p.var(&mut tape, "integrated.linear.bias")?;
                nn::linear(&mut tape, flat, w, b)?
            }
        };

        let fused_p = tape.scale(c_p, lambda);
        let fused_i = tape.scale(c_i, F::of(cfg.eta));
        let c = tape.add(fused_p, fused_i)?;

        Ok(Forward {
            tape,
            params: p,
            trunk,
            v_img,
            c_p,
            attr_logits,
            a: Some(a),
            e_a: Some(e_a),
            e_p: Some(e_p),
            e: Some(e),
            c_i: Some(c_i),
            c,
        })
    }

    /// Logits of the trunk and category head alone, i.e. the single-task
    /// classifier that shares this model's weights.
    pub fn baseline_logits(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        self.check_image(x)?;
        let mut tape = Tape::inference();
        let mut p = Bound::new(&self.params);
        let input = tape.constant(center(x));
        let trunk = self.trunk_forward(&mut tape, &mut p, input)?;
        let c_p = Self::head_forward(&mut tape, &mut p, "category_head", *trunk.last().unwrap())?;
        Ok(tape.value(c_p).clone())
    }

    /// Category and attribute losses on an existing forward pass.
    pub fn loss(&self, fwd: &mut Forward<'_, F>, label: usize, attr_gt: &[u8]) -> Result<LossVars> {
        let cfg = &self.config;
        if label >= cfg.n_classes {
            return Err(Error::InvalidArgument(format!(
                "label {label} out of range for {} classes",
                cfg.n_classes
            )));
        }
        let tape = &mut fwd.tape;
        let target = match (cfg.loss_target, fwd.c_i) {
            (LossTarget::Integrated, Some(c_i)) => c_i,
            _ => fwd.c,
        };
        let probs = tape.softmax(target)?;
        let l_c = nn::cross_entropy(tape, &Tensor::one_hot(cfg.n_classes, label)?, probs)?;
        let weighted_c = tape.scale(l_c, F::of(cfg.lambda));

        if !cfg.attributes_enabled() {
            return Ok(LossVars {
                total: weighted_c,
                l_c,
                l_a: None,
            });
        }
        if attr_gt.len() != cfg.n_attributes || attr_gt.iter().any(|&v| v > 1) {
            return Err(Error::InvalidArgument(format!(
                "attribute row must hold {} binary entries",
                cfg.n_attributes
            )));
        }
        let mut terms = Vec::with_capacity(attr_gt.len());
        for (&logits, &gt) in fwd.attr_logits.iter().zip(attr_gt) {
            let probs = tape.softmax(logits)?;
            terms.push(nn::cross_entropy(tape, &Tensor::one_hot(2, gt as usize)?, probs)?);
        }
        let stacked = tape.stack(&terms)?;
        let l_a = tape.mean(stacked);
        let weighted_a = tape.scale(l_a, F::of(cfg.eta));
        let total = tape.add(weighted_c, weighted_a)?;
        Ok(LossVars {
            total,
            l_c,
            l_a: Some(l_a),
        })
    }

    /// Predicted class (argmax of `c`, lowest index on ties), attribute
    /// presence probabilities and the full forward snapshot.
    pub fn predict(&self, x: &Tensor<F>) -> Result<(usize, Vec<f32>, ForwardOutputs)> {
        let fwd = self.forward(Tape::inference(), x)?;
        Ok((fwd.predicted_class(), fwd.attribute_probs(), fwd.outputs()))
    }
}
