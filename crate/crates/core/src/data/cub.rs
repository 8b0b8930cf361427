//! Reader for the CUB-200-2011 directory layout.
//!
//! ```text
//! <root>/images.txt                 <image_id> <relative path>
//! <root>/image_class_labels.txt     <image_id> <class_id, 1-based>
//! <root>/classes.txt                <class_id> <name>
//! <root>/train_test_split.txt       <image_id> <1 = train, 0 = test>
//! <root>/attributes/class_attribute_labels_continuous.txt
//!                                   one row of percentages per class
//! attributes.txt                    <attribute_id> <name>, in <root>,
//!                                   <root>/attributes or the parent of <root>
//! <root>/images/<relative path>
//! <root>/segmentations/<relative path with .png>   optional
//! ```

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use image::imageops::FilterType;

use crate::data::dataset::{AttributeMatrix, Dataset, Sample, Split};
use crate::error::{Error, Result};
use crate::far::ForegroundMask;
use crate::io;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct CubOptions {
    /// Presence fraction above which a class carries an attribute.
    pub threshold: f64,
    pub image_size: usize,
    /// Read and resize pixel data. Without it, samples carry empty images,
    /// which is enough to inspect labels and the attribute matrix.
    pub load_images: bool,
}

impl Default for CubOptions {
    fn default() -> Self {
        CubOptions {
            threshold: 0.5,
            image_size: 32,
            load_images: true,
        }
    }
}

/// `(line number, fields)` of every non-empty line, split on whitespace into
/// at most `max_fields` fields.
fn read_table(path: &Path, max_fields: usize) -> Result<Vec<(usize, Vec<String>)>> {
    let text = io::read_to_string(path)?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.trim().splitn(max_fields, char::is_whitespace).map(|s| s.trim().to_string()).collect()))
        .collect())
}

fn id_value_pairs(path: &Path) -> Result<Vec<(usize, usize, String)>> {
    read_table(path, 2)?
        .into_iter()
        .map(|(line, f)| {
            let [id, value] = <[String; 2]>::try_from(f)
                .map_err(|_| Error::parse(path, line, "expected `<id> <value>`"))?;
            let id = id.parse::<usize>().map_err(|_| Error::parse(path, line, format!("bad id `{id}`")))?;
            Ok((line, id, value))
        })
        .collect()
}

fn find_attribute_names(root: &Path) -> Option<PathBuf> {
    let candidates = [
        root.join("attributes.txt"),
        root.join("attributes").join("attributes.txt"),
        root.parent().map(|p| p.join("attributes.txt")).unwrap_or_default(),
    ];
    candidates.into_iter().find(|p| p.is_file())
}

fn load_rgb(path: &Path, size: usize) -> Result<Tensor<f32>> {
    let img = image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        source: e,
    })?;
    let rgb = image::imageops::resize(&img.to_rgb8(), size as u32, size as u32, FilterType::Triangle);
    let plane = size * size;
    let mut data = vec![0.0f32; 3 * plane];
    for (i, px) in rgb.pixels().enumerate() {
        for c in 0..3 {
            data[c * plane + i] = px[c] as f32 / 255.0;
        }
    }
    Tensor::new([3, size, size], data)
}

fn load_mask(path: &Path, size: usize) -> Result<ForegroundMask> {
    let img = image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        source: e,
    })?;
    let gray = image::imageops::resize(&img.to_luma8(), size as u32, size as u32, FilterType::Triangle);
    Ok(ForegroundMask::from_gray(size, size, gray.as_raw()))
}

/// Loads a CUB-format directory. Class-attribute percentages are divided by
/// 100 and compared against `threshold`.
pub fn load_cub_format(root: &Path, opts: &CubOptions) -> Result<Dataset> {
    if !root.join("images.txt").is_file() {
        return Err(Error::DatasetNotInstalled(root.to_path_buf()));
    }
    let images = id_value_pairs(&root.join("images.txt"))?;
    let labels_path = root.join("image_class_labels.txt");
    let labels: HashMap<usize, (usize, usize)> = id_value_pairs(&labels_path)?
        .into_iter()
        .map(|(line, id, v)| (id, (line, v.parse::<usize>().unwrap_or(0))))
        .collect();
    let split_path = root.join("train_test_split.txt");
    let splits: HashMap<usize, (usize, String)> = id_value_pairs(&split_path)?
        .into_iter()
        .map(|(line, id, v)| (id, (line, v)))
        .collect();

    let classes_path = root.join("classes.txt");
    let mut class_names = Vec::new();
    for (line, id, name) in id_value_pairs(&classes_path)? {
        if id != class_names.len() + 1 {
            return Err(Error::parse(&classes_path, line, format!("expected class id {}", class_names.len() + 1)));
        }
        class_names.push(name.replace(',', ";"));
    }

    let cont_path = root.join("attributes").join("class_attribute_labels_continuous.txt");
    let rows = read_table(&cont_path, usize::MAX)?;
    if rows.len() != class_names.len() {
        return Err(Error::format(
            &cont_path,
            format!("{} rows for {} classes", rows.len(), class_names.len()),
        ));
    }
    let n_attributes = rows
        .first()
        .map(|(_, r)| r.iter().flat_map(|f| f.split_whitespace()).count())
        .unwrap_or(0);
    let mut values = Vec::with_capacity(rows.len() * n_attributes);
    for (line, fields) in &rows {
        let fields: Vec<&str> = fields.iter().flat_map(|f| f.split_whitespace()).collect();
        if fields.len() != n_attributes {
            return Err(Error::parse(&cont_path, *line, format!("expected {n_attributes} values, got {}", fields.len())));
        }
        for f in fields {
            let pct: f64 = f
                .parse()
                .map_err(|_| Error::parse(&cont_path, *line, format!("bad percentage `{f}`")))?;
            values.push(u8::from(pct / 100.0 > opts.threshold));
        }
    }
    if values.iter().all(|&v| v == 0) {
        log::warn!("threshold {} leaves every class without attributes", opts.threshold);
    }

    let attribute_names = match find_attribute_names(root) {
        Some(path) => {
            let names: Vec<String> = id_value_pairs(&path)?.into_iter().map(|(_, _, n)| n.replace(',', ";")).collect();
            if names.len() != n_attributes {
                return Err(Error::format(&path, format!("{} names for {n_attributes} attributes", names.len())));
            }
            names
        }
        None => (1..=n_attributes).map(|i| format!("attribute {i}")).collect(),
    };
    let attributes = AttributeMatrix::new(values, class_names, attribute_names)?;

    let mut samples = Vec::with_capacity(images.len());
    for (line, id, rel) in images {
        let missing = |what: &str| Error::parse(root.join("images.txt"), line, format!("image {id} has no {what}"));
        let &(lline, class_id) = labels.get(&id).ok_or_else(|| missing("class label"))?;
        if class_id == 0 || class_id > attributes.n_classes() {
            return Err(Error::parse(&labels_path, lline, format!("class id {class_id} out of range")));
        }
        let (sline, flag) = splits.get(&id).ok_or_else(|| missing("split"))?;
        let split = match flag.as_str() {
            "1" => Split::Train,
            "0" => Split::Test,
            other => return Err(Error::parse(&split_path, *sline, format!("bad split flag `{other}`"))),
        };
        let label = class_id - 1;
        let (image, mask) = if opts.load_images {
            let image = load_rgb(&root.join("images").join(&rel), opts.image_size)?;
            let seg = root.join("segmentations").join(Path::new(&rel).with_extension("png"));
            let mask = if seg.is_file() {
                Some(load_mask(&seg, opts.image_size)?)
            } else {
                None
            };
            (image, mask)
        } else {
            (Tensor::zeros([3, 0, 0]), None)
        };
        samples.push(Sample {
            image_id: format!("cub_{id:05}"),
            image,
            label,
            attributes: attributes.row(label).to_vec(),
            mask,
            split,
        });
    }
    Ok(Dataset { samples, attributes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn fixture(dir: &Path) {
        fs::create_dir_all(dir.join("images/001.A")).unwrap();
        fs::create_dir_all(dir.join("segmentations/001.A")).unwrap();
        fs::create_dir_all(dir.join("attributes")).unwrap();
        fs::write(dir.join("images.txt"), "1 001.A/a.png\n2 001.A/b.png\n").unwrap();
        fs::write(dir.join("image_class_labels.txt"), "1 1\n2 2\n").unwrap();
        fs::write(dir.join("classes.txt"), "1 001.A\n2 002.B\n").unwrap();
        fs::write(dir.join("train_test_split.txt"), "1 1\n2 0\n").unwrap();
        fs::write(
            dir.join("attributes/class_attribute_labels_continuous.txt"),
            "80.0 10.0 50.0\n20.0 60.0 100.0\n",
        )
        .unwrap();
        fs::write(dir.join("attributes.txt"), "1 has_wing\n2 has_bill\n3 has_tail\n").unwrap();
        let png = image::RgbImage::from_fn(8, 8, |x, _| image::Rgb([(x * 30) as u8, 0, 255]));
        png.save(dir.join("images/001.A/a.png")).unwrap();
        png.save(dir.join("images/001.A/b.png")).unwrap();
        let seg = image::GrayImage::from_fn(8, 8, |x, _| image::Luma([if x < 4 { 255 } else { 0 }]));
        seg.save(dir.join("segmentations/001.A/a.png")).unwrap();
    }

    #[test]
    fn missing_root_is_not_installed() {
        let err = load_cub_format(Path::new("/nonexistent/cub"), &CubOptions::default()).unwrap_err();
        assert!(matches!(err, Error::DatasetNotInstalled(_)));
    }

    #[test]
    fn reads_fixture() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path());
        let opts = CubOptions {
            image_size: 4,
            ..CubOptions::default()
        };
        let ds = load_cub_format(dir.path(), &opts).unwrap();
        assert_eq!(ds.samples.len(), 2);
        assert_eq!(ds.attributes.row(0), &[1, 0, 0]);
        assert_eq!(ds.attributes.row(1), &[0, 1, 1]);
        assert_eq!(ds.attributes.attribute_names()[1], "has_bill");
        let a = &ds.samples[0];
        assert_eq!((a.label, a.split), (0, Split::Train));
        assert_eq!(a.image.shape(), &[3, 4, 4]);
        assert_eq!(a.mask.as_ref().unwrap().values(), &[1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0]);
        assert!(ds.samples[1].mask.is_none());
        assert_eq!(ds.samples[1].split, Split::Test);
    }

    #[test]
    fn full_threshold_zeroes_matrix() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path());
        let opts = CubOptions {
            threshold: 1.0,
            load_images: false,
            ..CubOptions::default()
        };
        let ds = load_cub_format(dir.path(), &opts).unwrap();
        assert!(ds.attributes.values().iter().all(|&v| v == 0));
    }

    #[test]
    fn bad_row_names_line() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path());
        fs::write(
            dir.path().join("attributes/class_attribute_labels_continuous.txt"),
            "80.0 10.0 50.0\n20.0 x 100.0\n",
        )
        .unwrap();
        let err = load_cub_format(dir.path(), &CubOptions::default()).unwrap_err().to_string();
        assert!(err.contains(":2:"), "{err}");
    }
}
