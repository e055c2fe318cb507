//! Separate digital chain used as the cliff-effect reference: uniform pixel
//! quantization, optional Hamming(7,4), Gray-mapped BPSK/QPSK/16-QAM, AWGN and
//! hard decisions.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluation::metrics::{psnr, sigma2_for_snr};
use crate::numerics::RngStream;
use crate::source_codec::ImageSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelCode {
    None,
    Hamming74,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulation {
    Bpsk,
    Qam4,
    Qam16,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qam4 => 2,
            Modulation::Qam16 => 4,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Modulation::Bpsk => "bpsk",
            Modulation::Qam4 => "qam4",
            Modulation::Qam16 => "qam16",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        match s {
            "bpsk" => Some(Modulation::Bpsk),
            "qam4" => Some(Modulation::Qam4),
            "qam16" => Some(Modulation::Qam16),
            _ => None,
        }
    }
}

impl ChannelCode {
    pub fn tag(self) -> &'static str {
        match self {
            ChannelCode::None => "none",
            ChannelCode::Hamming74 => "hamming74",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        match s {
            "none" => Some(ChannelCode::None),
            "hamming74" => Some(ChannelCode::Hamming74),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    pub bits_per_pixel: u32,
    pub code: ChannelCode,
    pub modulation: Modulation,
    pub power: f64,
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=8).contains(&self.bits_per_pixel) {
            return Err(Error::Config(format!(
                "quantizer needs 1..=8 bits per pixel, got {}",
                self.bits_per_pixel
            )));
        }
        if !(self.power > 0.0) {
            return Err(Error::Config("baseline power must be positive".into()));
        }
        Ok(())
    }

    pub fn tag(&self) -> String {
        format!(
            "q{}+{}+{}",
            self.bits_per_pixel,
            self.code.tag(),
            self.modulation.tag()
        )
    }

    /// Complex channel uses needed for an image of `num_pixels` values.
    pub fn channel_uses(&self, num_pixels: usize) -> usize {
        let source_bits = num_pixels * self.bits_per_pixel as usize;
        let coded = match self.code {
            ChannelCode::None => source_bits,
            ChannelCode::Hamming74 => source_bits.div_ceil(4) * 7,
        };
        coded.div_ceil(self.modulation.bits_per_symbol())
    }
}

/// Uniform quantizer: index of the `2^bits` equal bins.
pub fn quantize(pixel: u8, bits: u32) -> u8 {
    pixel >> (8 - bits)
}

/// Bin midpoint.
pub fn dequantize(index: u8, bits: u32) -> u8 {
    let step = 1u16 << (8 - bits);
    (index as u16 * step + step / 2) as u8
}

/// Hamming(7,4) codeword `[p1, p2, d1, p3, d2, d3, d4]`.
pub fn hamming74_encode(data: [u8; 4]) -> [u8; 7] {
    let [d1, d2, d3, d4] = data;
    let p1 = d1 ^ d2 ^ d4;
    let p2 = d1 ^ d3 ^ d4;
    let p3 = d2 ^ d3 ^ d4;
    [p1, p2, d1, p3, d2, d3, d4]
}

/// Decode with single-error correction: the syndrome is the 1-based error position.
pub fn hamming74_decode(mut cw: [u8; 7]) -> [u8; 4] {
    let s1 = cw[0] ^ cw[2] ^ cw[4] ^ cw[6];
    let s2 = cw[1] ^ cw[2] ^ cw[5] ^ cw[6];
    let s3 = cw[3] ^ cw[4] ^ cw[5] ^ cw[6];
    let pos = (s1 | (s2 << 1) | (s3 << 2)) as usize;
    if pos != 0 {
        cw[pos - 1] ^= 1;
    }
    [cw[2], cw[4], cw[5], cw[6]]
}

// Gray-coded 4-PAM per axis: 00 → −3, 01 → −1, 11 → +1, 10 → +3.
fn pam4_level(b0: u8, b1: u8) -> f64 {
    match (b0, b1) {
        (0, 0) => -3.0,
        (0, 1) => -1.0,
        (1, 1) => 1.0,
        _ => 3.0,
    }
}

fn pam4_bits(x: f64) -> (u8, u8) {
    if x < -2.0 {
        (0, 0)
    } else if x < 0.0 {
        (0, 1)
    } else if x < 2.0 {
        (1, 1)
    } else {
        (1, 0)
    }
}

/// Map bits to `(re, im)` symbols of average energy `power`; pads with zeros.
pub fn modulate(bits: &[u8], modulation: Modulation, power: f64) -> Vec<(f64, f64)> {
    let k = modulation.bits_per_symbol();
    bits.chunks(k)
        .map(|c| {
            let b = |i: usize| c.get(i).copied().unwrap_or(0);
            match modulation {
                Modulation::Bpsk => {
                    let a = power.sqrt();
                    (if b(0) == 0 { a } else { -a }, 0.0)
                }
                Modulation::Qam4 => {
                    let a = (power / 2.0).sqrt();
                    let s = |v: u8| if v == 0 { a } else { -a };
                    (s(b(0)), s(b(1)))
                }
                Modulation::Qam16 => {
                    let a = (power / 10.0).sqrt();
                    (a * pam4_level(b(0), b(1)), a * pam4_level(b(2), b(3)))
                }
            }
        })
        .collect()
}

/// Hard-decision demodulation back to `num_bits` bits.
pub fn demodulate(
    symbols: &[(f64, f64)],
    modulation: Modulation,
    power: f64,
    num_bits: usize,
) -> Vec<u8> {
    let mut out = Vec::with_capacity(symbols.len() * modulation.bits_per_symbol());
    for &(re, im) in symbols {
        match modulation {
            Modulation::Bpsk => out.push(u8::from(re < 0.0)),
            Modulation::Qam4 => {
                out.push(u8::from(re < 0.0));
                out.push(u8::from(im < 0.0));
            }
            Modulation::Qam16 => {
                let a = (power / 10.0).sqrt();
                let (b0, b1) = pam4_bits(re / a);
                let (b2, b3) = pam4_bits(im / a);
                out.extend([b0, b1, b2, b3]);
            }
        }
    }
    out.truncate(num_bits);
    out
}

fn encode_image(image: &ImageSample, config: &BaselineConfig) -> Vec<u8> {
    let b = config.bits_per_pixel;
    let source: Vec<u8> = image
        .pixels()
        .iter()
        .flat_map(|&p| {
            let q = quantize(p, b);
            (0..b).rev().map(move |i| (q >> i) & 1)
        })
        .collect();
    match config.code {
        ChannelCode::None => source,
        ChannelCode::Hamming74 => source
            .chunks(4)
            .flat_map(|c| {
                let mut d = [0u8; 4];
                d[..c.len()].copy_from_slice(c);
                hamming74_encode(d)
            })
            .collect(),
    }
}

fn decode_image(
    bits: &[u8],
    template: &ImageSample,
    config: &BaselineConfig,
) -> Result<ImageSample> {
    let b = config.bits_per_pixel as usize;
    let n = template.pixels().len();
    let source: Vec<u8> = match config.code {
        ChannelCode::None => bits.to_vec(),
        ChannelCode::Hamming74 => bits
            .chunks(7)
            .flat_map(|c| {
                let mut cw = [0u8; 7];
                cw.copy_from_slice(c);
                hamming74_decode(cw)
            })
            .collect(),
    };
    let pixels = source[..n * b]
        .chunks(b)
        .map(|c| {
            let q = c.iter().fold(0u8, |acc, &bit| (acc << 1) | bit);
            dequantize(q, config.bits_per_pixel)
        })
        .collect();
    ImageSample::new(template.dims(), pixels)
}

/// Send one image through the chain with a fixed noise stream; returns the reconstruction.
pub fn transmit_image(
    image: &ImageSample,
    config: &BaselineConfig,
    sigma2: f64,
    rng: &mut RngStream,
) -> Result<ImageSample> {
    let bits = encode_image(image, config);
    let symbols = modulate(&bits, config.modulation, config.power);
    let std = (sigma2 / 2.0).sqrt();
    let received: Vec<(f64, f64)> = symbols
        .iter()
        .map(|&(re, im)| {
            let (nr, ni) = (rng.standard_normal(), rng.standard_normal());
            (re + std * nr, im + std * ni)
        })
        .collect();
    let hard = demodulate(&received, config.modulation, config.power, bits.len());
    decode_image(&hard, image, config)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRecord {
    pub snr_db: f64,
    pub psnr_db: f64,
    pub chain: String,
    pub channel_uses: usize,
}

const BASELINE_STREAM: u64 = 0xBA5E;

/// PSNR of the digital chain at each SNR (ascending). Image `i` sees the same
/// standard-normal draws at every SNR point.
pub fn digital_baseline_eval(
    config: &BaselineConfig,
    images: &[ImageSample],
    snrs_db: &[f64],
    seed: u64,
) -> Result<Vec<BaselineRecord>> {
    config.validate()?;
    if images.is_empty() {
        return Err(Error::Contract("baseline needs at least one image".into()));
    }
    let mut snrs = snrs_db.to_vec();
    snrs.sort_by(f64::total_cmp);
    let root = RngStream::new(seed, BASELINE_STREAM);
    let uses = config.channel_uses(images[0].pixels().len());
    snrs.par_iter()
        .map(|&snr| {
            let sigma2 = sigma2_for_snr(config.power, snr)?;
            let total = images
                .iter()
                .enumerate()
                .map(|(i, img)| {
                    let mut rng = root.derive(i as u64);
                    psnr(img, &transmit_image(img, config, sigma2, &mut rng)?)
                })
                .sum::<Result<f64>>()?;
            Ok(BaselineRecord {
                snr_db: snr,
                psnr_db: total / images.len() as f64,
                chain: config.tag(),
                channel_uses: uses,
            })
        })
        .collect()
}

pub fn baseline_csv(records: &[BaselineRecord]) -> String {
    let mut out = String::from("snr_db,psnr_db,chain\n");
    for r in records {
        out.push_str(&format!("{},{:.6},{}\n", r.snr_db, r.psnr_db, r.chain));
    }
    out
}
