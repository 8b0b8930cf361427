//! Gradient-weighted class activation maps.
//!
//! For a target score `y` and activation maps `A^k` of a convolutional layer
//! with `Z = h·w` positions, each channel weight is the spatial mean of the
//! gradient, `α_k = (1/Z) Σ_ij ∂y/∂A^k_ij`, and the map is
//! `ReLU(Σ_k α_k A^k)`, bilinearly resized to the input resolution.

use crate::data::netpbm::Raster;
use crate::error::{Error, Result};
use crate::model::EatModel;
use crate::scalar::Scalar;
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// What an attention map explains.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    /// The fused score `c[class]`.
    Class(usize),
    /// The "present" logit of attribute head `i`.
    Attribute(usize),
}

/// Non-negative attention values at input resolution, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionMap {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
    pub target: Target,
    /// Index of the trunk block the map was computed on.
    pub layer: usize,
}

/// Runs backward from `score` and combines the activation maps of
/// `activation` (`C×h×w`) with their spatially averaged gradients. Returns
/// the ReLU'd `h×w` map. A score that does not depend on the activation
/// yields an all-zero map.
pub fn grad_cam_on_tape<F: Scalar>(tape: &mut Tape<F>, activation: Var, score: Var) -> Result<Tensor<f64>> {
    let shape = tape.shape(activation).to_vec();
    if shape.len() != 3 {
        return Err(Error::InvalidArgument(format!(
            "grad-cam needs a C×h×w activation, got {shape:?}"
        )));
    }
    let (c, h, w) = (shape[0], shape[1], shape[2]);
    tape.retain(activation);
    tape.backward(score)?;
    let plane = h * w;
    let mut map = vec![0.0f64; plane];
    if let Some(grad) = tape.grad(activation) {
        let acts = tape.value(activation).data();
        let g = grad.data();
        for k in 0..c {
            let alpha = g[k * plane..(k + 1) * plane].iter().map(|v| v.as_f64()).sum::<f64>() / plane as f64;
            if alpha == 0.0 {
                continue;
            }
            for (m, a) in map.iter_mut().zip(&acts[k * plane..(k + 1) * plane]) {
                *m += alpha * a.as_f64();
            }
        }
    }
    for m in &mut map {
        *m = m.max(0.0);
    }
    Tensor::new([h, w], map)
}

/// Bilinear resize with half-pixel centres and edge clamping.
pub fn upsample_bilinear(src: &[f64], h: usize, w: usize, out_h: usize, out_w: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(out_h * out_w);
    let coord = |dst: usize, n_in: usize, n_out: usize| {
        let x = ((dst as f64 + 0.5) * n_in as f64 / n_out as f64 - 0.5).clamp(0.0, (n_in - 1) as f64);
        let lo = x.floor() as usize;
        let hi = (lo + 1).min(n_in - 1);
        (lo, hi, x - lo as f64)
    };
    for oy in 0..out_h {
        let (y0, y1, fy) = coord(oy, h, out_h);
        for ox in 0..out_w {
            let (x0, x1, fx) = coord(ox, w, out_w);
            let top = src[y0 * w + x0] * (1.0 - fx) + src[y0 * w + x1] * fx;
            let bottom = src[y1 * w + x0] * (1.0 - fx) + src[y1 * w + x1] * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    out
}

/// Grad-CAM of `target` on trunk block `layer` of `model`, at input
/// resolution.
pub fn grad_cam<F: Scalar>(model: &EatModel<F>, x: &Tensor<F>, target: Target, layer: usize) -> Result<AttentionMap> {
    let cfg = model.config();
    if layer >= cfg.trunk_channels.len() {
        return Err(Error::InvalidArgument(format!(
            "layer {layer} is not a trunk block (model has {})",
            cfg.trunk_channels.len()
        )));
    }
    let mut fwd = model.forward(Tape::new(), x)?;
    let score = match target {
        Target::Class(c) if c < cfg.n_classes => fwd.tape.index(fwd.c, c)?,
        Target::Attribute(i) if i < fwd.attr_logits.len() => fwd.tape.index(fwd.attr_logits[i], 1)?,
        _ => return Err(Error::InvalidArgument(format!("no such grad-cam target {target:?}"))),
    };
    let activation = fwd.trunk[layer];
    let raw = grad_cam_on_tape(&mut fwd.tape, activation, score)?;
    let (h, w) = (raw.shape()[0], raw.shape()[1]);
    let size = cfg.image_size;
    Ok(AttentionMap {
        height: size,
        width: size,
        values: upsample_bilinear(raw.data(), h, w, size, size),
        target,
        layer,
    })
}

/// Blue-to-red colour ramp for `t ∈ [0, 1]`.
fn colormap(t: f64) -> [f64; 3] {
    let ramp = |c: f64| (1.5 - (4.0 * t - c).abs()).clamp(0.0, 1.0);
    [ramp(3.0), ramp(2.0), ramp(1.0)]
}

/// Overlays a colourised map on a `3×H×W` image with 50 % opacity. The map
/// is min-max normalised for display only; a constant map renders as the
/// bottom colour of the ramp.
pub fn render_map(map: &AttentionMap, base: &Tensor<f32>) -> Result<Raster> {
    if base.shape() != [3, map.height, map.width] {
        return Err(Error::ShapeMismatch {
            op: "render_map",
            lhs: vec![3, map.height, map.width],
            rhs: base.shape().to_vec(),
        });
    }
    let (lo, hi) = map
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    let plane = map.height * map.width;
    let img = base.data();
    let mut data = Vec::with_capacity(3 * plane);
    for (i, &v) in map.values.iter().enumerate() {
        let t = if range > 0.0 { (v - lo) / range } else { 0.0 };
        let color = colormap(t);
        for (c, &tint) in color.iter().enumerate() {
            let blended = 0.5 * img[c * plane + i] as f64 + 0.5 * tint;
            data.push((blended.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    Ok(Raster {
        width: map.width,
        height: map.height,
        channels: 3,
        data,
    })
}
