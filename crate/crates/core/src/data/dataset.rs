//! Synthetic image datasets and their binary file format.
//!
//! File layout (big-endian): magic `SJDS` (4) | version u16 | count u32 | H u16 |
//! W u16 | C u16 (16 bytes), followed by `count·H·W·C` pixel bytes, H×W×C row-major per image.

use crate::error::{Error, Result};
use crate::numerics::RngStream;
use crate::source_codec::{ImageDims, ImageSample};

pub const DATASET_MAGIC: &[u8; 4] = b"SJDS";
pub const DATASET_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetHeader {
    pub version: u16,
    pub count: u32,
    pub dims: ImageDims,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub dims: ImageDims,
    pub images: Vec<ImageSample>,
}

/// Index lists into a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub evaluation: Vec<usize>,
}

impl Dataset {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.images.len() * self.dims.num_values());
        out.extend_from_slice(DATASET_MAGIC);
        out.extend_from_slice(&DATASET_VERSION.to_be_bytes());
        out.extend_from_slice(&(self.images.len() as u32).to_be_bytes());
        for d in [self.dims.height, self.dims.width, self.dims.channels] {
            out.extend_from_slice(&(d as u16).to_be_bytes());
        }
        for img in &self.images {
            out.extend_from_slice(img.pixels());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = parse_header(bytes)?;
        let per = header.dims.num_values();
        let expected = HEADER_LEN + header.count as usize * per;
        if bytes.len() != expected {
            return Err(Error::Format {
                offset: bytes.len().min(expected),
                msg: format!(
                    "dataset declares {} images ({expected} bytes) but file has {} bytes",
                    header.count,
                    bytes.len()
                ),
            });
        }
        let images = bytes[HEADER_LEN..]
            .chunks_exact(per)
            .map(|c| ImageSample::new(header.dims, c.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dims: header.dims,
            images,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn select(&self, idx: &[usize]) -> Vec<ImageSample> {
        idx.iter().map(|&i| self.images[i].clone()).collect()
    }

    /// Seeded shuffle; validation and evaluation sizes are `floor(ratio·count)`,
    /// training takes the remainder.
    pub fn split(&self, validation_ratio: f64, evaluation_ratio: f64, seed: u64) -> Split {
        let n = self.images.len();
        let mut idx: Vec<usize> = (0..n).collect();
        RngStream::new(seed, SPLIT_STREAM).shuffle(&mut idx);
        let n_val = (validation_ratio * n as f64).floor() as usize;
        let n_eval = (evaluation_ratio * n as f64).floor() as usize;
        let evaluation = idx.split_off(n - n_eval);
        let validation = idx.split_off(n - n_eval - n_val);
        Split {
            train: idx,
            validation,
            evaluation,
        }
    }
}

const SPLIT_STREAM: u64 = 0x5B17;
const GENERATOR_STREAM: u64 = 0x6E4;

pub fn parse_header(bytes: &[u8]) -> Result<DatasetHeader> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format {
            offset: bytes.len(),
            msg: format!(
                "truncated dataset header ({} of {HEADER_LEN} bytes)",
                bytes.len()
            ),
        });
    }
    if &bytes[..4] != DATASET_MAGIC {
        return Err(Error::Format {
            offset: 0,
            msg: format!("bad dataset magic {:02X?}", &bytes[..4]),
        });
    }
    let version = u16::from_be_bytes([bytes[4], bytes[5]]);
    if version != DATASET_VERSION {
        return Err(Error::Format {
            offset: 4,
            msg: format!("unsupported dataset version {version}"),
        });
    }
    let count = u32::from_be_bytes([bytes[6], bytes[7], bytes[8], bytes[9]]);
    let dim = |o: usize| u16::from_be_bytes([bytes[o], bytes[o + 1]]) as usize;
    let dims = ImageDims::new(dim(10), dim(12), dim(14));
    if dims.num_values() == 0 {
        return Err(Error::Format {
            offset: 10,
            msg: "image dimensions must be positive".into(),
        });
    }
    Ok(DatasetHeader {
        version,
        count,
        dims,
    })
}

fn paint(
    pixels: &mut [f64],
    dims: ImageDims,
    mut f: impl FnMut(usize, usize, usize) -> Option<f64>,
) {
    for r in 0..dims.height {
        for c in 0..dims.width {
            for ch in 0..dims.channels {
                if let Some(v) = f(r, c, ch) {
                    pixels[(r * dims.width + c) * dims.channels + ch] = v;
                }
            }
        }
    }
}

fn colors(rng: &mut RngStream, channels: usize) -> Vec<f64> {
    (0..channels).map(|_| 255.0 * rng.uniform()).collect()
}

/// One parametric image: a linear gradient, rectangles, discs or a checkerboard.
fn synthesize(dims: ImageDims, rng: &mut RngStream) -> ImageSample {
    let (h, w, ch) = (dims.height as f64, dims.width as f64, dims.channels);
    let mut px = vec![0.0; dims.num_values()];
    match rng.below(4) {
        0 => {
            let angle = std::f64::consts::TAU * rng.uniform();
            let (dx, dy) = (angle.cos(), angle.sin());
            let a = colors(rng, ch);
            let b = colors(rng, ch);
            let half = 0.5 * (h.abs() * dy.abs() + w * dx.abs()).max(1.0);
            paint(&mut px, dims, |r, c, k| {
                let t = ((c as f64 + 0.5 - w / 2.0) * dx + (r as f64 + 0.5 - h / 2.0) * dy) / half;
                let t = (0.5 + 0.5 * t).clamp(0.0, 1.0);
                Some(a[k] + (b[k] - a[k]) * t)
            });
        }
        1 => {
            let bg = colors(rng, ch);
            paint(&mut px, dims, |_, _, k| Some(bg[k]));
            for _ in 0..1 + rng.below(3) {
                let r0 = rng.below(dims.height);
                let c0 = rng.below(dims.width);
                let r1 = r0 + 1 + rng.below(dims.height - r0);
                let c1 = c0 + 1 + rng.below(dims.width - c0);
                let fg = colors(rng, ch);
                paint(&mut px, dims, |r, c, k| {
                    (r >= r0 && r < r1 && c >= c0 && c < c1).then(|| fg[k])
                });
            }
        }
        2 => {
            let bg = colors(rng, ch);
            paint(&mut px, dims, |_, _, k| Some(bg[k]));
            for _ in 0..1 + rng.below(2) {
                let cy = h * rng.uniform();
                let cx = w * rng.uniform();
                let rad = (0.15 + 0.35 * rng.uniform()) * h.min(w);
                let fg = colors(rng, ch);
                paint(&mut px, dims, |r, c, k| {
                    let d2 = (r as f64 + 0.5 - cy).powi(2) + (c as f64 + 0.5 - cx).powi(2);
                    (d2 <= rad * rad).then(|| fg[k])
                });
            }
        }
        _ => {
            let cell = 1 + rng.below(dims.height.min(dims.width).div_ceil(2).max(1));
            let (oy, ox) = (rng.below(cell), rng.below(cell));
            let a = colors(rng, ch);
            let b = colors(rng, ch);
            paint(&mut px, dims, |r, c, k| {
                let parity = ((r + oy) / cell + (c + ox) / cell) % 2;
                Some(if parity == 0 { a[k] } else { b[k] })
            });
        }
    }
    let pixels = px
        .iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    ImageSample::new(dims, pixels).expect("generator respects dims")
}

/// `count` synthetic images, fully determined by `seed`.
pub fn generate_synthetic(count: usize, dims: ImageDims, seed: u64) -> Result<Dataset> {
    if dims.num_values() == 0 {
        return Err(Error::Config("image dimensions must be positive".into()));
    }
    let root = RngStream::new(seed, GENERATOR_STREAM);
    let images = (0..count)
        .map(|i| synthesize(dims, &mut root.derive(i as u64)))
        .collect();
    Ok(Dataset { dims, images })
}
