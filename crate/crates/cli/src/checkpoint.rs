//! Checkpoint files.
//!
//! All integers are little-endian `u32`.
//!
//! ```text
//! "EATCKPT1"
//! format version
//! config length, config text (`key=value` lines)
//! repeated until the trailer:
//!     name length, name (UTF-8), ndims, dims..., f32 data
//! CRC32 of every preceding byte
//! ```

use std::path::Path;

use eat_core::nn::LayerParams;
use eat_core::{EatConfig, EatModel, Tensor};

pub const MAGIC: &[u8; 8] = b"EATCKPT1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("file is too short to be a checkpoint")]
    TooShort,
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("truncated {0}")]
    Truncated(&'static str),
    #[error("malformed config: {0}")]
    Config(String),
    #[error("malformed parameter table: {0}")]
    Table(String),
    #[error(transparent)]
    Model(#[from] eat_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

type Result<T> = std::result::Result<T, CheckpointError>;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn config_text(cfg: &EatConfig) -> String {
    cfg.to_pairs().into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

pub fn encode(model: &EatModel<f32>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, FORMAT_VERSION);
    let cfg = config_text(model.config());
    put_u32(&mut out, cfg.len() as u32);
    out.extend_from_slice(cfg.as_bytes());
    for (name, t) in model.params().iter() {
        put_u32(&mut out, name.len() as u32);
        out.extend_from_slice(name.as_bytes());
        put_u32(&mut out, t.ndim() as u32);
        for &d in t.shape() {
            put_u32(&mut out, d as u32);
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    put_u32(&mut out, crc);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or(CheckpointError::Truncated(what))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &'static str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn done(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

fn parse_config(text: &str) -> Result<EatConfig> {
    let mut cfg = EatConfig::default();
    for line in text.lines() {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CheckpointError::Config(format!("line `{line}` is not key=value")))?;
        if !cfg.set(k, v)? {
            return Err(CheckpointError::Config(format!("unknown key `{k}`")));
        }
    }
    Ok(cfg)
}

pub fn decode(bytes: &[u8]) -> Result<EatModel<f32>> {
    if bytes.len() < MAGIC.len() + 12 {
        return Err(CheckpointError::TooShort);
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes([trailer[0], trailer[1], trailer[2], trailer[3]]);
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(CheckpointError::Checksum { stored, computed });
    }
    if &body[..MAGIC.len()] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let mut r = Reader {
        bytes: body,
        pos: MAGIC.len(),
    };
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(CheckpointError::Version(version));
    }
    let len = r.u32("config length")? as usize;
    let text = std::str::from_utf8(r.take(len, "config")?)
        .map_err(|_| CheckpointError::Config("config is not UTF-8".into()))?;
    let config = parse_config(text)?;

    let mut params = LayerParams::new();
    while !r.done() {
        let len = r.u32("name length")? as usize;
        let name = std::str::from_utf8(r.take(len, "name")?)
            .map_err(|_| CheckpointError::Table("parameter name is not UTF-8".into()))?
            .to_string();
        let ndims = r.u32("rank")? as usize;
        if ndims > 8 {
            return Err(CheckpointError::Table(format!("`{name}` claims rank {ndims}")));
        }
        let mut shape = Vec::with_capacity(ndims);
        for _ in 0..ndims {
            shape.push(r.u32("dims")? as usize);
        }
        let numel = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        let numel = numel.ok_or_else(|| CheckpointError::Table(format!("`{name}` is too large")))?;
        let raw = r.take(numel.checked_mul(4).ok_or(CheckpointError::Truncated("data"))?, "data")?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        params.insert(name, Tensor::new(shape, data)?)?;
    }
    Ok(EatModel::from_params(config, params)?)
}

pub fn save(path: &Path, model: &EatModel<f32>) -> eat_core::Result<()> {
    eat_core::io::write_atomic(path, &encode(model))
}

pub fn load(path: &Path) -> Result<EatModel<f32>> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> EatModel<f32> {
        EatModel::new(EatConfig {
            n_classes: 3,
            n_attributes: 2,
            d_e: 4,
            image_size: 8,
            trunk_channels: vec![3, 4],
            trunk_strides: vec![2, 2],
            head_channels: 3,
            integrated_channels: 2,
            lambda: 0.7,
            eta: 1.3,
            seed: 5,
            ..EatConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = tiny();
        let bytes = encode(&m);
        assert_eq!(&bytes[..8], MAGIC);
        let back = decode(&bytes).unwrap();
        assert_eq!(back.config(), m.config());
        for ((na, a), (nb, b)) in m.params().iter().zip(back.params().iter()) {
            assert_eq!(na, nb);
            let bits = |t: &Tensor<f32>| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a), bits(b));
        }
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn rejects_damage() {
        let bytes = encode(&tiny());
        assert!(matches!(decode(&bytes[..10]), Err(CheckpointError::TooShort)));
        assert!(matches!(decode(&bytes[..bytes.len() - 1]), Err(CheckpointError::Checksum { .. })));
        let mut flipped = bytes.clone();
        flipped[20] ^= 0x40;
        assert!(matches!(decode(&flipped), Err(CheckpointError::Checksum { .. })));
    }

    #[test]
    fn valid_crc_with_bad_magic() {
        let mut bytes = encode(&tiny());
        bytes[0] = b'X';
        let n = bytes.len() - 4;
        let crc = crc32fast::hash(&bytes[..n]);
        bytes[n..].copy_from_slice(&crc.to_le_bytes());
        assert!(matches!(decode(&bytes), Err(CheckpointError::BadMagic)));
    }
}
