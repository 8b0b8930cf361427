//! Foreground Attention Rate.
//!
//! The pixel importance of a region is the mean attention inside it,
//! `PI(AT, M) = |AT ⊙ M| / |M|`. FAR divides the foreground importance by the
//! background importance, so it does not change when a map is rescaled and
//! a map that lights up the whole image scores about 1.

use std::fmt::Write as _;

use crate::data::dataset::Sample;
use crate::data::netpbm::Raster;
use crate::error::{Error, Result};
use crate::gradcam::{grad_cam, AttentionMap, Target};
use crate::model::EatModel;
use crate::parallel;

/// Added to the background importance before dividing.
pub const FAR_EPSILON: f64 = 1e-8;

/// Binary object mask at image resolution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForegroundMask {
    height: usize,
    width: usize,
    values: Vec<u8>,
    foreground_count: usize,
}

impl ForegroundMask {
    pub fn new(height: usize, width: usize, values: Vec<u8>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::InvalidArgument(format!(
                "mask of {height}×{width} needs {} values, got {}",
                height * width,
                values.len()
            )));
        }
        if values.iter().any(|&v| v > 1) {
            return Err(Error::InvalidArgument("mask values must be 0 or 1".into()));
        }
        let foreground_count = values.iter().filter(|&&v| v == 1).count();
        Ok(ForegroundMask {
            height,
            width,
            values,
            foreground_count,
        })
    }

    /// Thresholds 8-bit gray levels at half intensity.
    pub fn from_gray(height: usize, width: usize, gray: &[u8]) -> Self {
        let values = gray.iter().map(|&g| u8::from(g as f64 / 255.0 > 0.5)).collect();
        Self::new(height, width, values).expect("gray buffer matches mask size")
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn foreground_count(&self) -> usize {
        self.foreground_count
    }

    /// True when the mask is all foreground or all background.
    pub fn is_degenerate(&self) -> bool {
        self.foreground_count == 0 || self.foreground_count == self.values.len()
    }

    pub fn foreground(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }

    pub fn background(&self) -> Vec<f64> {
        self.values.iter().map(|&v| 1.0 - v as f64).collect()
    }

    pub fn to_raster(&self) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.values.iter().map(|&v| v * 255).collect(),
        }
    }
}

/// Mean attention over a region: `Σ(AT ⊙ m) / Σ m`.
pub fn pixel_importance(at: &[f64], region: &[f64]) -> Result<f64> {
    if at.len() != region.len() {
        return Err(Error::ShapeMismatch {
            op: "pixel_importance",
            lhs: vec![at.len()],
            rhs: vec![region.len()],
        });
    }
    let area: f64 = region.iter().sum();
    if area == 0.0 {
        return Err(Error::DegenerateMask("region is empty".into()));
    }
    let mass: f64 = at.iter().zip(region).map(|(a, m)| a * m).sum();
    Ok(mass / area)
}

/// FAR of one map together with the two importances it was built from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FarValue {
    pub far: f64,
    pub pi_fg: f64,
    pub pi_bg: f64,
    /// Background importance was exactly zero, so `far = pi_fg / ε`.
    pub saturated: bool,
}

/// `PI(AT, M) / (PI(AT, 1 − M) + ε)` for raw attention values at mask
/// resolution.
pub fn far_values(at: &[f64], mask: &ForegroundMask) -> Result<FarValue> {
    if mask.is_degenerate() {
        return Err(Error::DegenerateMask(format!(
            "{} of {} pixels are foreground",
            mask.foreground_count,
            mask.values.len()
        )));
    }
    let pi_fg = pixel_importance(at, &mask.foreground())?;
    let pi_bg = pixel_importance(at, &mask.background())?;
    Ok(FarValue {
        far: pi_fg / (pi_bg + FAR_EPSILON),
        pi_fg,
        pi_bg,
        saturated: pi_bg == 0.0,
    })
}

pub fn far(at: &AttentionMap, mask: &ForegroundMask) -> Result<FarValue> {
    if (at.height, at.width) != (mask.height, mask.width) {
        return Err(Error::ShapeMismatch {
            op: "far",
            lhs: vec![at.height, at.width],
            rhs: vec![mask.height, mask.width],
        });
    }
    far_values(&at.values, mask)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FarEntry {
    pub image_id: String,
    pub value: FarValue,
    pub correct: bool,
}

/// Per-image FAR values of one model over a set of images.
#[derive(Clone, Debug, PartialEq)]
pub struct FarReport {
    pub model_tag: String,
    pub per_image: Vec<FarEntry>,
    /// Images without a usable mask.
    pub skipped: Vec<String>,
    /// Mean over entries whose FAR is finite and not saturated.
    pub mean_far: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct FarOptions {
    /// Trunk layer the Grad-CAM maps are taken from.
    pub layer: usize,
    /// Only average over correctly classified images.
    pub correct_only: bool,
    pub threads: usize,
}

impl FarReport {
    pub fn from_entries(model_tag: impl Into<String>, mut per_image: Vec<FarEntry>, mut skipped: Vec<String>) -> Self {
        per_image.sort_by(|a, b| a.image_id.cmp(&b.image_id));
        skipped.sort();
        let usable: Vec<f64> = per_image
            .iter()
            .filter(|e| e.value.far.is_finite() && !e.value.saturated)
            .map(|e| e.value.far)
            .collect();
        let mean_far = if usable.is_empty() {
            f64::NAN
        } else {
            usable.iter().sum::<f64>() / usable.len() as f64
        };
        FarReport {
            model_tag: model_tag.into(),
            per_image,
            skipped,
            mean_far,
        }
    }

    /// `image_id,far,pi_fg,pi_bg,saturated` rows followed by a `#` summary line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("image_id,far,pi_fg,pi_bg,saturated\n");
        for e in &self.per_image {
            let _ = writeln!(
                out,
                "{},{:.9},{:.9},{:.9},{}",
                e.image_id, e.value.far, e.value.pi_fg, e.value.pi_bg, e.value.saturated
            );
        }
        let _ = writeln!(
            out,
            "# model={} mean_far={:.9} images={} skipped={}",
            self.model_tag,
            self.mean_far,
            self.per_image.len(),
            self.skipped.join(";")
        );
        out
    }
}

/// Grad-CAM for the predicted class of every sample, scored against its mask.
pub fn far_batch(model: &EatModel<f32>, samples: &[&Sample], tag: &str, opts: FarOptions) -> Result<FarReport> {
    let results = parallel::map_ordered(samples, opts.threads, |s| -> Result<Option<FarEntry>> {
        let Some(mask) = s.mask.as_ref().filter(|m| !m.is_degenerate()) else {
            return Ok(None);
        };
        let (pred, _, _) = model.predict(&s.image)?;
        let map = grad_cam(model, &s.image, Target::Class(pred), opts.layer)?;
        Ok(Some(FarEntry {
            image_id: s.image_id.clone(),
            value: far(&map, mask)?,
            correct: pred == s.label,
        }))
    });
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for (s, r) in samples.iter().zip(results) {
        match r? {
            Some(e) if !opts.correct_only || e.correct => entries.push(e),
            Some(_) => {}
            None => skipped.push(s.image_id.clone()),
        }
    }
    Ok(FarReport::from_entries(tag, entries, skipped))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn left_column_mask() -> ForegroundMask {
        ForegroundMask::new(2, 2, vec![1, 0, 1, 0]).unwrap()
    }

    #[test]
    fn pixel_importance_hand_case() {
        let at = [0.8, 0.2, 0.4, 0.0];
        let m = left_column_mask();
        assert!((pixel_importance(&at, &m.foreground()).unwrap() - 0.6).abs() < 1e-12);
        let all = [1.0; 4];
        assert!((pixel_importance(&at, &all).unwrap() - 0.35).abs() < 1e-12);
        assert_eq!(pixel_importance(&[0.0; 4], &all).unwrap(), 0.0);
        assert!(pixel_importance(&at, &[0.0; 4]).is_err());
    }

    #[test]
    fn far_hand_case() {
        let v = far_values(&[0.8, 0.2, 0.4, 0.0], &left_column_mask()).unwrap();
        assert!((v.pi_fg - 0.6).abs() < 1e-12);
        assert!((v.pi_bg - 0.1).abs() < 1e-12);
        assert!((v.far - 6.0).abs() < 1e-6);
        assert!(!v.saturated);
    }

    #[test]
    fn degenerate_masks_are_errors() {
        let full = ForegroundMask::new(1, 2, vec![1, 1]).unwrap();
        assert!(far_values(&[1.0, 1.0], &full).is_err());
        let empty = ForegroundMask::new(1, 2, vec![0, 0]).unwrap();
        assert!(far_values(&[1.0, 1.0], &empty).is_err());
        assert!(ForegroundMask::new(1, 2, vec![0, 2]).is_err());
    }

    #[test]
    fn zero_background_saturates() {
        let v = far_values(&[0.5, 0.0], &ForegroundMask::new(1, 2, vec![1, 0]).unwrap()).unwrap();
        assert!(v.saturated);
        assert!((v.far - 0.5 / FAR_EPSILON).abs() < 1e-3);
    }

    #[test]
    fn gray_masks_threshold_at_half() {
        let m = ForegroundMask::from_gray(1, 4, &[0, 127, 128, 255]);
        assert_eq!(m.values(), &[0, 0, 1, 1]);
    }

    #[test]
    fn report_mean_skips_saturated() {
        let entry = |id: &str, far: f64, saturated: bool| FarEntry {
            image_id: id.into(),
            value: FarValue {
                far,
                pi_fg: 0.0,
                pi_bg: 0.0,
                saturated,
            },
            correct: true,
        };
        let r = FarReport::from_entries(
            "m",
            vec![entry("b", 3.0, false), entry("a", 1.0, false), entry("c", 1e8, true)],
            vec![],
        );
        assert_eq!(r.per_image[0].image_id, "a");
        assert!((r.mean_far - 2.0).abs() < 1e-12);
        let csv = r.to_csv();
        assert!(csv.starts_with("image_id,far,pi_fg,pi_bg,saturated\na,"));
        assert!(csv.lines().last().unwrap().starts_with("# model=m mean_far=2.0"));
    }
}
