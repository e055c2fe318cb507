//! Scalar link and image-quality metrics.

use statrs::function::erf::erfc;

use crate::error::{contract, Result};
use crate::interface::{Codeword, ReliabilityProfile};
use crate::source_codec::ImageSample;

/// PSNR reported for a zero-error reconstruction.
pub const PSNR_CAP_DB: f64 = 100.0;
const PEAK: f64 = 255.0;

/// `10 log10(P̄ / σ²)`.
pub fn snr_db(power: f64, sigma2: f64) -> Result<f64> {
    if !(power > 0.0 && sigma2 > 0.0) {
        return Err(contract(format!(
            "SNR needs positive power and noise variance, got {power} and {sigma2}"
        )));
    }
    Ok(10.0 * (power / sigma2).log10())
}

/// Noise variance per complex symbol giving `snr_db` at power `power`; `+∞ dB` maps to 0.
pub fn sigma2_for_snr(power: f64, snr_db: f64) -> Result<f64> {
    if !(power > 0.0) || snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(contract(format!(
            "invalid power {power} or SNR {snr_db} dB"
        )));
    }
    Ok(power / 10f64.powf(snr_db / 10.0))
}

/// Bandwidth compression ratio `K / (H·W·C)`.
pub fn bcr(num_symbols: usize, height: usize, width: usize, channels: usize) -> Result<f64> {
    let n = height * width * channels;
    if n == 0 {
        return Err(contract("image dimensions must be positive"));
    }
    Ok(num_symbols as f64 / n as f64)
}

/// PSNR from a per-pixel mean squared error in the 8-bit domain.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CAP_DB
    } else {
        (10.0 * (PEAK * PEAK / mse).log10()).min(PSNR_CAP_DB)
    }
}

pub fn mse(x: &[u8], y: &[u8]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| (a as f64 - b as f64).powi(2))
        .sum::<f64>()
        / x.len() as f64
}

/// `10 log10(255² / MSE)` with MSE the mean over pixels; capped at [`PSNR_CAP_DB`].
pub fn psnr(x: &ImageSample, xhat: &ImageSample) -> Result<f64> {
    if x.dims() != xhat.dims() {
        return Err(contract(format!(
            "PSNR of images with different dims {:?} and {:?}",
            x.dims(),
            xhat.dims()
        )));
    }
    Ok(psnr_from_mse(mse(x.pixels(), xhat.pixels())))
}

/// Running per-level bit-error counters.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelErrorCounter {
    errors: Vec<u64>,
    bits: Vec<u64>,
}

impl LevelErrorCounter {
    pub fn new(levels: usize) -> Self {
        Self {
            errors: vec![0; levels],
            bits: vec![0; levels],
        }
    }

    pub fn add(&mut self, u: &Codeword, v: &Codeword, profile: &ReliabilityProfile) -> Result<()> {
        if u.len() != profile.codeword_bits() || v.len() != profile.codeword_bits() {
            return Err(contract("codeword length does not match the profile"));
        }
        for level in 1..=profile.levels() {
            let r = profile.level_range(level);
            let errs = u.bits()[r.clone()]
                .iter()
                .zip(&v.bits()[r.clone()])
                .filter(|(a, b)| a != b)
                .count();
            self.errors[level - 1] += errs as u64;
            self.bits[level - 1] += r.len() as u64;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.errors.iter_mut().zip(&other.errors) {
            *a += b;
        }
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a += b;
        }
    }

    pub fn rates(&self) -> Vec<f64> {
        self.errors
            .iter()
            .zip(&self.bits)
            .map(|(&e, &n)| if n == 0 { 0.0 } else { e as f64 / n as f64 })
            .collect()
    }
}

/// Fraction of positions per level where `v` differs from `u`, over matched batches.
pub fn empirical_ber_per_level(
    u_batch: &[Codeword],
    v_batch: &[Codeword],
    profile: &ReliabilityProfile,
) -> Result<Vec<f64>> {
    if u_batch.len() != v_batch.len() {
        return Err(contract("BER batches differ in length"));
    }
    let mut counter = LevelErrorCounter::new(profile.levels());
    for (u, v) in u_batch.iter().zip(v_batch) {
        counter.add(u, v, profile)?;
    }
    Ok(counter.rates())
}

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties. NaN if either side is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "spearman needs equal-length inputs");
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
