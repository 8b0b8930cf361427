//! On-disk dataset directories.
//!
//! ```text
//! <root>/images/<id>.ppm   P6 RGB image
//! <root>/masks/<id>.pgm    P5 foreground mask, 0 = background, 255 = foreground (optional)
//! <root>/labels.csv        id,class_index
//! <root>/attributes.csv    header = attribute names; one 0/1 row per class
//! <root>/classes.csv       class_index,name
//! <root>/split.csv         id,split   (split is `train` or `test`)
//! ```

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data::netpbm::Raster;
use crate::error::{Error, Result};
use crate::far::ForegroundMask;
use crate::io;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidArgument(format!("unknown split `{other}`"))),
        }
    }
}

/// Binary class-attribute matrix: row `c` lists the attributes every image
/// of class `c` carries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttributeMatrix {
    values: Vec<u8>,
    attribute_names: Vec<String>,
    class_names: Vec<String>,
}

impl AttributeMatrix {
    pub fn new(values: Vec<u8>, class_names: Vec<String>, attribute_names: Vec<String>) -> Result<Self> {
        let (nc, na) = (class_names.len(), attribute_names.len());
        if values.len() != nc * na {
            return Err(Error::InvalidArgument(format!(
                "attribute matrix needs {nc}×{na} entries, got {}",
                values.len()
            )));
        }
        if values.iter().any(|&v| v > 1) {
            return Err(Error::InvalidArgument("attribute matrix must be binary".into()));
        }
        let m = AttributeMatrix {
            values,
            attribute_names,
            class_names,
        };
        if let Some((a, b)) = m.duplicate_rows() {
            log::warn!(
                "classes {a} and {b} share an identical attribute row; attributes cannot separate them"
            );
        }
        Ok(m)
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.attribute_names.len()
    }

    pub fn row(&self, class: usize) -> &[u8] {
        let na = self.n_attributes();
        &self.values[class * na..(class + 1) * na]
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// First pair of classes with identical rows, if any.
    pub fn duplicate_rows(&self) -> Option<(usize, usize)> {
        let mut seen: HashMap<&[u8], usize> = HashMap::new();
        for c in 0..self.n_classes() {
            if let Some(&prev) = seen.get(self.row(c)) {
                return Some((prev, c));
            }
            seen.insert(self.row(c), c);
        }
        None
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub image_id: String,
    /// `3×H×W`, values in `[0, 1]`.
    pub image: Tensor<f32>,
    pub label: usize,
    pub attributes: Vec<u8>,
    pub mask: Option<ForegroundMask>,
    pub split: Split,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub attributes: AttributeMatrix,
}

impl Dataset {
    pub fn split(&self, split: Split) -> Vec<&Sample> {
        self.samples.iter().filter(|s| s.split == split).collect()
    }

    pub fn find(&self, image_id: &str) -> Option<&Sample> {
        self.samples.iter().find(|s| s.image_id == image_id)
    }

    pub fn image_size(&self) -> Option<usize> {
        self.samples.first().map(|s| s.image.shape()[1])
    }

    pub fn n_classes(&self) -> usize {
        self.attributes.n_classes()
    }

    pub fn n_attributes(&self) -> usize {
        self.attributes.n_attributes()
    }

    /// Writes the documented directory layout to `root` atomically.
    pub fn write(&self, root: &Path) -> Result<()> {
        for name in self.attributes.attribute_names.iter().chain(&self.attributes.class_names) {
            if name.contains(',') || name.contains('\n') {
                return Err(Error::InvalidArgument(format!("name `{name}` contains a comma or newline")));
            }
        }
        io::write_dir_atomic(root, |dir| {
            let images = dir.join("images");
            let masks = dir.join("masks");
            std::fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
            std::fs::create_dir_all(&masks).map_err(|e| Error::io(&masks, e))?;
            let mut labels = String::from("id,class_index\n");
            let mut split = String::from("id,split\n");
            for s in &self.samples {
                let path = images.join(format!("{}.ppm", s.image_id));
                std::fs::write(&path, image_to_raster(&s.image).encode()).map_err(|e| Error::io(&path, e))?;
                if let Some(m) = &s.mask {
                    let path = masks.join(format!("{}.pgm", s.image_id));
                    std::fs::write(&path, m.to_raster().encode()).map_err(|e| Error::io(&path, e))?;
                }
                labels.push_str(&format!("{},{}\n", s.image_id, s.label));
                split.push_str(&format!("{},{}\n", s.image_id, s.split));
            }
            let a = &self.attributes;
            let mut attrs = a.attribute_names.join(",");
            attrs.push('\n');
            for c in 0..a.n_classes() {
                let row: Vec<String> = a.row(c).iter().map(u8::to_string).collect();
                attrs.push_str(&row.join(","));
                attrs.push('\n');
            }
            let mut classes = String::from("class_index,name\n");
            for (i, n) in a.class_names.iter().enumerate() {
                classes.push_str(&format!("{i},{n}\n"));
            }
            for (name, text) in [
                ("labels.csv", labels),
                ("split.csv", split),
                ("attributes.csv", attrs),
                ("classes.csv", classes),
            ] {
                let path = dir.join(name);
                std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            }
            Ok(())
        })
    }
}

/// Quantises a `[0, 1]` image to 8-bit interleaved RGB.
pub fn image_to_raster(image: &Tensor<f32>) -> Raster {
    let (h, w) = (image.shape()[1], image.shape()[2]);
    let plane = h * w;
    let d = image.data();
    let mut data = Vec::with_capacity(3 * plane);
    for i in 0..plane {
        for c in 0..3 {
            data.push((d[c * plane + i].clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    Raster {
        width: w,
        height: h,
        channels: 3,
        data,
    }
}

/// Planar `3×H×W` tensor with values scaled to `[0, 1]`.
pub fn raster_to_image(r: &Raster) -> Tensor<f32> {
    let plane = r.width * r.height;
    let mut data = vec![0.0f32; 3 * plane];
    for i in 0..plane {
        for c in 0..3 {
            let v = if r.channels == 3 { r.data[i * 3 + c] } else { r.data[i] };
            data[c * plane + i] = v as f32 / 255.0;
        }
    }
    Tensor::new([3, r.height, r.width], data).expect("consistent raster")
}

struct Csv {
    path: PathBuf,
    rows: Vec<(usize, Vec<String>)>,
}

fn read_csv(path: &Path) -> Result<Csv> {
    let text = io::read_to_string(path)?;
    let rows = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.split(',').map(|f| f.trim().to_string()).collect()))
        .collect();
    Ok(Csv {
        path: path.to_path_buf(),
        rows,
    })
}

impl Csv {
    fn header(&self) -> Result<&[String]> {
        self.rows
            .first()
            .map(|(_, r)| r.as_slice())
            .ok_or_else(|| Error::parse(&self.path, 1, "missing header"))
    }

    fn body(&self) -> &[(usize, Vec<String>)] {
        self.rows.get(1..).unwrap_or(&[])
    }

    fn pairs(&self) -> Result<Vec<(usize, String, String)>> {
        self.body()
            .iter()
            .map(|(line, r)| match r.as_slice() {
                [a, b] => Ok((*line, a.clone(), b.clone())),
                _ => Err(Error::parse(&self.path, *line, format!("expected 2 fields, got {}", r.len()))),
            })
            .collect()
    }
}

/// Loads a dataset directory, validating it against the documented layout.
pub fn load_dataset(root: &Path) -> Result<Dataset> {
    if !root.is_dir() {
        return Err(Error::io(root, std::io::Error::new(std::io::ErrorKind::NotFound, "no such dataset directory")));
    }
    let classes = read_csv(&root.join("classes.csv"))?;
    let mut class_names = Vec::new();
    for (line, idx, name) in classes.pairs()? {
        if idx.parse::<usize>().ok() != Some(class_names.len()) {
            return Err(Error::parse(&classes.path, line, format!("expected class index {}", class_names.len())));
        }
        class_names.push(name);
    }

    let attrs = read_csv(&root.join("attributes.csv"))?;
    let attribute_names = attrs.header()?.to_vec();
    let mut values = Vec::new();
    for (line, row) in attrs.body() {
        if row.len() != attribute_names.len() {
            return Err(Error::parse(
                &attrs.path,
                *line,
                format!("expected {} attribute values, got {}", attribute_names.len(), row.len()),
            ));
        }
        for v in row {
            match v.as_str() {
                "0" => values.push(0),
                "1" => values.push(1),
                other => return Err(Error::parse(&attrs.path, *line, format!("attribute value `{other}` is not 0 or 1"))),
            }
        }
    }
    let rows = values.len() / attribute_names.len().max(1);
    if rows != class_names.len() {
        return Err(Error::format(
            &attrs.path,
            format!("{rows} attribute rows for {} classes", class_names.len()),
        ));
    }
    let matrix = AttributeMatrix::new(values, class_names, attribute_names)?;

    let split_csv = read_csv(&root.join("split.csv"))?;
    let mut splits = HashMap::new();
    for (line, id, s) in split_csv.pairs()? {
        let s = s.parse().map_err(|_| Error::parse(&split_csv.path, line, format!("unknown split `{s}`")))?;
        splits.insert(id, s);
    }

    let labels = read_csv(&root.join("labels.csv"))?;
    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    let mut size = None;
    for (line, id, class) in labels.pairs()? {
        let label: usize = class
            .parse()
            .ok()
            .filter(|&c| c < matrix.n_classes())
            .ok_or_else(|| Error::parse(&labels.path, line, format!("class index `{class}` out of range")))?;
        if !seen.insert(id.clone()) {
            return Err(Error::parse(&labels.path, line, format!("duplicate id {id}")));
        }
        let split = *splits
            .get(&id)
            .ok_or_else(|| Error::parse(&labels.path, line, format!("id {id} missing from split.csv")))?;
        let img_path = root.join("images").join(format!("{id}.ppm"));
        let raster = Raster::read(&img_path)?;
        if raster.channels != 3 {
            return Err(Error::format(&img_path, "expected an RGB (P6) image"));
        }
        let dims = (raster.width, raster.height);
        if *size.get_or_insert(dims) != dims {
            return Err(Error::format(&img_path, "image size differs from the rest of the dataset"));
        }
        let mask_path = root.join("masks").join(format!("{id}.pgm"));
        let mask = if mask_path.exists() {
            let m = Raster::read(&mask_path)?;
            if (m.width, m.height) != dims || m.channels != 1 {
                return Err(Error::format(&mask_path, "mask must be a P5 image of the image's size"));
            }
            Some(ForegroundMask::from_gray(m.height, m.width, &m.data))
        } else {
            None
        };
        samples.push(Sample {
            image_id: id,
            image: raster_to_image(&raster),
            label,
            attributes: matrix.row(label).to_vec(),
            mask,
            split,
        });
    }
    Ok(Dataset {
        samples,
        attributes: matrix,
    })
}
