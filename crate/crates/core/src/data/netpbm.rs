//! Binary PPM (P6) and PGM (P5) with 8-bit samples.

use std::path::Path;

use crate::error::{Error, Result};

/// An 8-bit raster with `channels` interleaved samples per pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

impl Raster {
    pub fn encode(&self) -> Vec<u8> {
        let magic = match self.channels {
            1 => "P5",
            3 => "P6",
            n => panic!("netpbm supports 1 or 3 channels, got {n}"),
        };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn decode(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut pos = 0;
        let magic = next_token(bytes, &mut pos).ok_or_else(|| Error::format(path, "empty file"))?;
        let channels = match magic.as_slice() {
            b"P5" => 1,
            b"P6" => 3,
            _ => return Err(Error::format(path, "not a binary PGM/PPM (expected P5 or P6)")),
        };
        let mut header = [0usize; 3];
        for (slot, what) in header.iter_mut().zip(["width", "height", "maxval"]) {
            let tok = next_token(bytes, &mut pos)
                .ok_or_else(|| Error::format(path, format!("missing {what}")))?;
            *slot = std::str::from_utf8(&tok)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::format(path, format!("bad {what}")))?;
        }
        let [width, height, maxval] = header;
        if maxval != 255 {
            return Err(Error::format(path, format!("unsupported maxval {maxval}")));
        }
        // Exactly one whitespace byte separates the header from the raster.
        pos += 1;
        let n = width * height * channels;
        if bytes.len() < pos + n {
            return Err(Error::format(path, "truncated raster"));
        }
        Ok(Raster {
            width,
            height,
            channels,
            data: bytes[pos..pos + n].to_vec(),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes, path)
    }
}

fn next_token(bytes: &[u8], pos: &mut usize) -> Option<Vec<u8>> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (start < *pos).then(|| bytes[start..*pos].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_round_trip() {
        let r = Raster {
            width: 2,
            height: 1,
            channels: 3,
            data: vec![1, 2, 3, 250, 10, 32],
        };
        let bytes = r.encode();
        assert!(bytes.starts_with(b"P6\n2 1\n255\n"));
        assert_eq!(Raster::decode(&bytes, Path::new("x")).unwrap(), r);
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut bytes = b"P5\n# made by hand\n2 2\n# depth\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255, 255, 0]);
        let r = Raster::decode(&bytes, Path::new("m.pgm")).unwrap();
        assert_eq!((r.width, r.height, r.channels), (2, 2, 1));
        assert_eq!(r.data, vec![0, 255, 255, 0]);
    }

    #[test]
    fn truncated_raster_rejected() {
        let bytes = b"P6\n4 4\n255\n\x00\x01".to_vec();
        let err = Raster::decode(&bytes, Path::new("bad.ppm")).unwrap_err();
        assert!(err.to_string().contains("bad.ppm"));
    }
}

#[cfg(test)]
mod props {
    use proptest::prelude::*;

    use super::*;

    fn raster() -> impl Strategy<Value = Raster> {
        (1usize..9, 1usize..9, prop_oneof![Just(1usize), Just(3usize)]).prop_flat_map(|(width, height, channels)| {
            prop::collection::vec(any::<u8>(), width * height * channels).prop_map(move |data| Raster {
                width,
                height,
                channels,
                data,
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn encode_decode_round_trip(r in raster()) {
            prop_assert_eq!(Raster::decode(&r.encode(), Path::new("p")).unwrap(), r);
        }

        #[test]
        fn truncation_is_rejected(r in raster(), cut in 1usize..8) {
            let bytes = r.encode();
            let keep = bytes.len().saturating_sub(cut);
            prop_assert!(Raster::decode(&bytes[..keep], Path::new("p")).is_err());
        }
    }
}
