//! Synthetic biased dataset.
//!
//! Every class is a distinct combination of visual attributes of a single
//! object (shape, fill colour, size, border, stripes). The background is the
//! class's own palette colour with probability `bias` and a random muted
//! colour otherwise, so a high training bias lets a classifier get away with
//! looking at the background only. Masks are produced while rendering.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::dataset::{AttributeMatrix, Dataset, Sample, Split};
use crate::error::{Error, Result};
use crate::far::ForegroundMask;
use crate::tensor::Tensor;

/// Attribute vocabulary in column order. Using `k` attributes keeps the
/// first `k`.
pub const ATTRIBUTE_NAMES: [&str; 6] = [
    "shape: circle",
    "shape: triangle",
    "fill color: blue",
    "size: large",
    "border: present",
    "pattern: striped",
];

const YELLOW: [f64; 3] = [0.95, 0.85, 0.15];
const BLUE: [f64; 3] = [0.15, 0.35, 0.95];
const BORDER: [f64; 3] = [0.05, 0.05, 0.05];
const PALETTE_SATURATION: f64 = 0.45;
const PALETTE_VALUE: f64 = 0.5;
const NOISE: f64 = 0.03;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub n_classes: usize,
    pub n_attributes: usize,
    /// Training images per class.
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub image_size: usize,
    /// Probability that a training background is the class palette colour.
    pub bias_train: f64,
    pub bias_test: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_classes: 8,
            n_attributes: 6,
            train_per_class: 200,
            test_per_class: 50,
            image_size: 32,
            bias_train: 0.95,
            bias_test: 0.0,
            seed: 0,
        }
    }
}

/// Number of distinct valid attribute rows over the first `k` attributes.
/// The two shape bits encode square (0,0), circle (1,0) and triangle (0,1).
pub fn row_capacity(k: usize) -> usize {
    match k {
        0 => 1,
        1 => 2,
        _ => 3 << (k - 2),
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n_classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.n_classes));
        }
        if self.n_attributes == 0 || self.n_attributes > ATTRIBUTE_NAMES.len() {
            return bad(format!(
                "attribute count must be in 1..={}, got {}",
                ATTRIBUTE_NAMES.len(),
                self.n_attributes
            ));
        }
        let needed = usize::BITS - (self.n_classes - 1).leading_zeros();
        if (self.n_attributes as u32) < needed {
            return bad(format!(
                "{} classes need at least {needed} attributes, got {}",
                self.n_classes, self.n_attributes
            ));
        }
        if self.n_classes > row_capacity(self.n_attributes) {
            return bad(format!(
                "{} attributes admit only {} distinct classes, asked for {}",
                self.n_attributes,
                row_capacity(self.n_attributes),
                self.n_classes
            ));
        }
        if self.train_per_class == 0 && self.test_per_class == 0 {
            return bad("no images requested".into());
        }
        if self.image_size < 16 {
            return bad(format!("image size must be at least 16, got {}", self.image_size));
        }
        for (name, b) in [("train", self.bias_train), ("test", self.bias_test)] {
            if !(0.0..=1.0).contains(&b) {
                return bad(format!("{name} bias must be in [0, 1], got {b}"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shape {
    Square,
    Circle,
    Triangle,
}

/// Object description decoded from a full six-bit attribute row.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Object {
    shape: Shape,
    blue: bool,
    large: bool,
    border: bool,
    striped: bool,
}

impl Object {
    fn from_row(row: &[u8]) -> Object {
        let bit = |i: usize| row.get(i).copied().unwrap_or(0) == 1;
        let shape = match (bit(0), bit(1)) {
            (true, false) => Shape::Circle,
            (false, true) => Shape::Triangle,
            _ => Shape::Square,
        };
        Object {
            shape,
            blue: bit(2),
            large: bit(3),
            border: bit(4),
            striped: bit(5),
        }
    }
}

fn valid_row(row: &[u8]) -> bool {
    !(row.len() >= 2 && row[0] == 1 && row[1] == 1)
}

/// Picks `n_classes` distinct valid rows such that no column is constant.
fn class_rows(n_classes: usize, n_attributes: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<u8>> {
    let all: Vec<Vec<u8>> = (0..1usize << n_attributes)
        .map(|code| (0..n_attributes).map(|i| ((code >> i) & 1) as u8).collect())
        .filter(|r: &Vec<u8>| valid_row(r))
        .collect();
    loop {
        let picked: Vec<Vec<u8>> = all.choose_multiple(rng, n_classes).cloned().collect();
        let varied = (0..n_attributes).all(|j| {
            let ones = picked.iter().filter(|r| r[j] == 1).count();
            ones > 0 && ones < n_classes
        });
        if varied || n_classes < 2 {
            return picked;
        }
    }
}

pub fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h6 = (h.rem_euclid(1.0)) * 6.0;
    let sector = h6.floor() as usize % 6;
    let f = h6 - h6.floor();
    let (p, q, t) = (v * (1.0 - s), v * (1.0 - s * f), v * (1.0 - s * (1.0 - f)));
    match sector {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

/// Background colour tied to class `c`.
pub fn palette_color(c: usize, n_classes: usize) -> [f64; 3] {
    hsv_to_rgb(c as f64 / n_classes as f64, PALETTE_SATURATION, PALETTE_VALUE)
}

/// Random muted colour, independent of the class.
fn random_background(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let h = rng.gen::<f64>();
    let s = rng.gen_range(0.3..0.6);
    let v = rng.gen_range(0.35..0.65);
    hsv_to_rgb(h, s, v)
}

/// Distance from a local point to the outline, positive inside.
fn depth(shape: Shape, radius: f64, x: f64, y: f64) -> f64 {
    match shape {
        Shape::Circle => radius - (x * x + y * y).sqrt(),
        Shape::Square => {
            // equal area to the circle
            let s = radius * std::f64::consts::PI.sqrt() / 2.0;
            (s - x.abs()).min(s - y.abs())
        }
        Shape::Triangle => {
            // equilateral, equal area to the circle; inradius is half the circumradius
            let r_circ = radius * (4.0 * std::f64::consts::PI / (3.0 * 3f64.sqrt())).sqrt();
            (0..3)
                .map(|k| {
                    let a = std::f64::consts::FRAC_PI_2 + k as f64 * 2.0 * std::f64::consts::PI / 3.0;
                    r_circ / 2.0 - (x * a.cos() + y * a.sin())
                })
                .fold(f64::INFINITY, f64::min)
        }
    }
}

/// Radius of the smallest circle around the local origin that holds the shape.
fn extent(shape: Shape, radius: f64) -> f64 {
    match shape {
        Shape::Circle => radius,
        Shape::Square => radius * std::f64::consts::PI.sqrt() / 2.0 * std::f64::consts::SQRT_2,
        Shape::Triangle => radius * (4.0 * std::f64::consts::PI / (3.0 * 3f64.sqrt())).sqrt(),
    }
}

/// Background choice plus rendered image and mask for one sample.
pub struct Rendered {
    pub image: Tensor<f32>,
    pub mask: ForegroundMask,
    /// The background is the palette colour of the sample's class.
    pub palette_background: bool,
    pub background: [f64; 3],
}

fn render(obj: Object, class: usize, n_classes: usize, size: usize, bias: f64, rng: &mut ChaCha8Rng) -> Rendered {
    let palette_background = rng.gen::<f64>() < bias;
    let background = if palette_background {
        palette_color(class, n_classes)
    } else {
        random_background(rng)
    };
    let scale = size as f64 / 32.0;
    let radius = if obj.large { 8.5 } else { 5.5 } * scale;
    let reach = extent(obj.shape, radius) + 1.0;
    let lo = reach;
    let hi = size as f64 - reach;
    let cx = rng.gen_range(lo..hi);
    let cy = rng.gen_range(lo..hi);
    let theta = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
    let stripe_phase = rng.gen_range(0.0..6.0);
    let (sin, cos) = theta.sin_cos();
    let fill = if obj.blue { BLUE } else { YELLOW };
    let stripe_color = fill.map(|v| v * 0.55);
    let border_width = 2.0 * scale;
    let stripe_width = 3.0 * scale;

    let plane = size * size;
    let mut data = vec![0.0f32; 3 * plane];
    let mut mask = vec![0u8; plane];
    for py in 0..size {
        for px in 0..size {
            let dx = px as f64 + 0.5 - cx;
            let dy = py as f64 + 0.5 - cy;
            let lx = cos * dx + sin * dy;
            let ly = -sin * dx + cos * dy;
            let d = depth(obj.shape, radius, lx, ly);
            let i = py * size + px;
            let color = if d > 0.0 {
                mask[i] = 1;
                if obj.border && d < border_width {
                    BORDER
                } else if obj.striped && ((ly + stripe_phase) / stripe_width).floor().rem_euclid(2.0) == 1.0 {
                    stripe_color
                } else {
                    fill
                }
            } else {
                background
            };
            for (c, &v) in color.iter().enumerate() {
                let noisy = v + rng.gen_range(-NOISE..NOISE);
                // quantise so the in-memory image equals the written one
                data[c * plane + i] = ((noisy.clamp(0.0, 1.0) * 255.0).round() / 255.0) as f32;
            }
        }
    }
    Rendered {
        image: Tensor::new([3, size, size], data).expect("consistent image"),
        mask: ForegroundMask::new(size, size, mask).expect("binary mask"),
        palette_background,
        background,
    }
}

/// Generated dataset plus the per-sample background bookkeeping.
pub struct SynthOutput {
    pub dataset: Dataset,
    /// Whether each sample (in dataset order) got its class palette background.
    pub palette_background: Vec<bool>,
    /// Background colour of each sample before noise.
    pub background: Vec<[f64; 3]>,
}

/// Generates the full dataset. Output depends only on `spec`.
pub fn synth_generate(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let rows = class_rows(spec.n_classes, spec.n_attributes, &mut rng);
    let class_names = rows
        .iter()
        .enumerate()
        .map(|(c, r)| {
            let o = Object::from_row(r);
            let mut name = format!("class{c}-{:?}", o.shape).to_lowercase();
            if spec.n_attributes > 2 {
                name.push_str(if o.blue { "-blue" } else { "-yellow" });
            }
            name
        })
        .collect();
    let attribute_names = ATTRIBUTE_NAMES[..spec.n_attributes].iter().map(|s| s.to_string()).collect();
    let attributes = AttributeMatrix::new(rows.concat(), class_names, attribute_names)?;

    let total = spec.n_classes * (spec.train_per_class + spec.test_per_class);
    let mut samples = Vec::with_capacity(total);
    let mut palette_background = Vec::with_capacity(total);
    let mut background = Vec::with_capacity(total);
    let mut stream = 1u64;
    for (split, per_class, bias) in [
        (Split::Train, spec.train_per_class, spec.bias_train),
        (Split::Test, spec.test_per_class, spec.bias_test),
    ] {
        for k in 0..spec.n_classes * per_class {
            let class = k % spec.n_classes;
            let mut srng = ChaCha8Rng::seed_from_u64(spec.seed);
            srng.set_stream(stream);
            stream += 1;
            let row = attributes.row(class).to_vec();
            let r = render(Object::from_row(&row), class, spec.n_classes, spec.image_size, bias, &mut srng);
            samples.push(Sample {
                image_id: format!("{split}_{k:05}"),
                image: r.image,
                label: class,
                attributes: row,
                mask: Some(r.mask),
                split,
            });
            palette_background.push(r.palette_background);
            background.push(r.background);
        }
    }
    Ok(SynthOutput {
        dataset: Dataset { samples, attributes },
        palette_background,
        background,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SynthSpec {
        SynthSpec {
            train_per_class: 5,
            test_per_class: 2,
            seed: 3,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn capacity_counts_shape_bits() {
        assert_eq!(row_capacity(1), 2);
        assert_eq!(row_capacity(2), 3);
        assert_eq!(row_capacity(6), 48);
        let count = (0..64u32)
            .filter(|c| valid_row(&[(c & 1) as u8, ((c >> 1) & 1) as u8]))
            .count();
        assert_eq!(count, 48);
    }

    #[test]
    fn spec_validation() {
        assert!(SynthSpec::default().validate().is_ok());
        let bad = |f: fn(&mut SynthSpec)| {
            let mut s = SynthSpec::default();
            f(&mut s);
            s.validate().is_err()
        };
        assert!(bad(|s| s.n_attributes = 2));
        assert!(bad(|s| s.n_attributes = 7));
        assert!(bad(|s| s.n_classes = 1));
        assert!(bad(|s| s.bias_train = 1.5));
        assert!(bad(|s| {
            s.n_classes = 4;
            s.n_attributes = 2;
        }));
        let mut ok = SynthSpec::default();
        ok.n_classes = 4;
        ok.n_attributes = 3;
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn classes_are_distinct_and_valid() {
        let out = synth_generate(&small_spec()).unwrap();
        let a = &out.dataset.attributes;
        assert_eq!((a.n_classes(), a.n_attributes()), (8, 6));
        assert!(a.duplicate_rows().is_none());
        for c in 0..8 {
            assert!(valid_row(a.row(c)));
        }
        for j in 0..6 {
            let ones = (0..8).filter(|&c| a.row(c)[j] == 1).count();
            assert!(ones > 0 && ones < 8, "attribute {j} is constant");
        }
    }

    #[test]
    fn samples_follow_invariants() {
        let out = synth_generate(&small_spec()).unwrap();
        let ds = &out.dataset;
        assert_eq!(ds.samples.len(), 8 * 7);
        assert_eq!(ds.split(Split::Train).len(), 40);
        for s in &ds.samples {
            assert_eq!(s.attributes, ds.attributes.row(s.label));
            let m = s.mask.as_ref().unwrap();
            assert!(!m.is_degenerate());
            assert!(s.image.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn same_seed_same_data() {
        let a = synth_generate(&small_spec()).unwrap();
        let b = synth_generate(&small_spec()).unwrap();
        assert_eq!(a.dataset, b.dataset);
        let mut other = small_spec();
        other.seed = 4;
        assert_ne!(a.dataset, synth_generate(&other).unwrap().dataset);
    }

    #[test]
    fn mask_matches_object_pixels() {
        // every pixel outside the mask is the background colour up to noise
        let spec = small_spec();
        let out = synth_generate(&spec).unwrap();
        for (s, bg) in out.dataset.samples.iter().zip(&out.background) {
            let m = s.mask.as_ref().unwrap();
            let plane = m.values().len();
            for (i, &inside) in m.values().iter().enumerate() {
                if inside == 0 {
                    for c in 0..3 {
                        let v = s.image.data()[c * plane + i] as f64;
                        assert!((v - bg[c]).abs() <= NOISE + 0.5 / 255.0 + 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn shapes_have_similar_area() {
        let r = 7.5;
        let area = |shape| {
            let n = 400;
            let step = 40.0 / n as f64;
            let mut count = 0;
            for i in 0..n {
                for j in 0..n {
                    let x = -20.0 + (i as f64 + 0.5) * step;
                    let y = -20.0 + (j as f64 + 0.5) * step;
                    if depth(shape, r, x, y) > 0.0 {
                        count += 1;
                    }
                }
            }
            count as f64 * step * step
        };
        let disk = std::f64::consts::PI * r * r;
        for shape in [Shape::Circle, Shape::Square, Shape::Triangle] {
            assert!((area(shape) / disk - 1.0).abs() < 0.02, "{shape:?}");
        }
    }

    #[test]
    fn hsv_primaries() {
        assert_eq!(hsv_to_rgb(0.0, 1.0, 1.0), [1.0, 0.0, 0.0]);
        let g = hsv_to_rgb(1.0 / 3.0, 1.0, 1.0);
        assert!((g[1] - 1.0).abs() < 1e-12 && g[0].abs() < 1e-12);
    }
}
