//! End-to-end evaluation: SNR sweeps, per-level BER and the level-importance probe.

use rayon::prelude::*;

use crate::channel_codec::{add_noise, draw_noise, ChannelCodecPair};
use crate::error::{contract, Result};
use crate::evaluation::metrics::{psnr, sigma2_for_snr, LevelErrorCounter};
use crate::interface::{bsc_apply, Codeword};
use crate::numerics::RngStream;
use crate::source_codec::{ImageSample, SourceCodecPair};

/// Relative tolerance on the average transmit power of every evaluated block.
pub const POWER_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub snr_db: f64,
    pub psnr_db: f64,
    pub ber_per_level: Vec<f64>,
    pub n_images: usize,
    pub seed: u64,
}

pub fn sweep_csv(records: &[SweepRecord]) -> String {
    let levels = records.first().map_or(0, |r| r.ber_per_level.len());
    let mut out = String::from("snr_db,psnr_db");
    for i in 1..=levels {
        out.push_str(&format!(",ber_level_{i}"));
    }
    out.push_str(",n_images,seed\n");
    for r in records {
        out.push_str(&format!("{},{:.6}", r.snr_db, r.psnr_db));
        for b in &r.ber_per_level {
            out.push_str(&format!(",{b:.6}"));
        }
        out.push_str(&format!(",{},{}\n", r.n_images, r.seed));
    }
    out
}

const SWEEP_STREAM: u64 = 0x5EE9;
const PROBE_STREAM: u64 = 0x9A0B;
const BER_STREAM: u64 = 0xBE12;

/// Parse `a:b:step` (dB, inclusive of `b` up to rounding).
pub fn parse_snr_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| crate::error::Error::Config(format!("bad SNR range {spec:?}: {e}")))?;
    match nums.as_slice() {
        [single] => Ok(vec![*single]),
        [a, b, step] if *step > 0.0 && b >= a => {
            let n = ((b - a) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| a + i as f64 * step).collect())
        }
        _ => Err(crate::error::Error::Config(format!(
            "SNR range must be a:b:step with step > 0 and b >= a, got {spec:?}"
        ))),
    }
}

/// Run `x → u → z → AWGN → y → v → x̂` at every SNR (dB, sorted ascending in the
/// output). Image `i` reuses the same standard-normal draws at every SNR point, so
/// points differ only in noise scale.
pub fn sweep_eval(
    source: &SourceCodecPair,
    channel: &ChannelCodecPair,
    images: &[ImageSample],
    snrs_db: &[f64],
    images_per_point: usize,
    seed: u64,
) -> Result<Vec<SweepRecord>> {
    if channel.codeword_bits() != source.codeword_bits() {
        return Err(contract(
            "channel codec does not match the source codeword length",
        ));
    }
    let n = images_per_point.min(images.len());
    if n == 0 {
        return Err(contract("sweep needs at least one image"));
    }
    let images = &images[..n];
    let prepared = images
        .par_iter()
        .map(|img| {
            let u = source.encode_bits(img)?;
            let z = channel.transmit(&u)?;
            let power = z.average_power();
            if ((power - channel.power) / channel.power).abs() > POWER_TOLERANCE {
                return Err(contract(format!(
                    "transmit power {power} violates the budget {}",
                    channel.power
                )));
            }
            Ok((u, z))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut snrs = snrs_db.to_vec();
    snrs.sort_by(f64::total_cmp);
    let root = RngStream::new(seed, SWEEP_STREAM);
    let profile = &source.profile;
    snrs.par_iter()
        .map(|&snr| {
            let sigma2 = sigma2_for_snr(channel.power, snr)?;
            let mut counter = LevelErrorCounter::new(profile.levels());
            let mut psnr_sum = 0.0;
            for (i, (img, (u, z))) in images.iter().zip(&prepared).enumerate() {
                let mut rng = root.derive(i as u64);
                let noise = draw_noise(z.reals().len(), sigma2, &mut rng)?;
                let y = add_noise(z, &noise)?;
                let v = channel.demap_bits(&y)?;
                counter.add(u, &v, profile)?;
                psnr_sum += psnr(img, &source.decode(&v)?)?;
            }
            Ok(SweepRecord {
                snr_db: snr,
                psnr_db: psnr_sum / n as f64,
                ber_per_level: counter.rates(),
                n_images: n,
                seed,
            })
        })
        .collect()
}

/// Mean PSNR of `decode(encode_bits(x))`: the interface without any bit errors.
pub fn clean_interface_psnr(source: &SourceCodecPair, images: &[ImageSample]) -> Result<f64> {
    if images.is_empty() {
        return Err(contract("need at least one image"));
    }
    let total = images
        .par_iter()
        .map(|img| psnr(img, &source.decode(&source.encode_bits(img)?)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(total.iter().sum::<f64>() / images.len() as f64)
}

/// Mean PSNR when every image in `eval` is predicted by the pixel-wise mean of `reference`.
pub fn mean_image_psnr(reference: &[ImageSample], eval: &[ImageSample]) -> Result<f64> {
    let first = reference
        .first()
        .ok_or_else(|| contract("mean predictor needs reference images"))?;
    if eval.is_empty() {
        return Err(contract("need at least one image"));
    }
    let len = first.pixels().len();
    let mut sums = vec![0.0; len];
    for img in reference {
        for (s, &p) in sums.iter_mut().zip(img.pixels()) {
            *s += p as f64;
        }
    }
    let mean: Vec<f64> = sums
        .iter()
        .map(|s| s / 255.0 / reference.len() as f64)
        .collect();
    let predicted = ImageSample::from_normalized(first.dims(), &mean)?;
    let total = eval
        .iter()
        .map(|img| psnr(img, &predicted))
        .sum::<Result<f64>>()?;
    Ok(total / eval.len() as f64)
}

/// For each level, flip only that level's bits with probability `flip_prob` and report
/// the mean PSNR drop against the clean-interface reconstruction.
pub fn level_importance_probe(
    source: &SourceCodecPair,
    images: &[ImageSample],
    flip_prob: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&flip_prob) {
        return Err(contract(format!(
            "flip probability {flip_prob} outside [0, 1]"
        )));
    }
    if images.is_empty() {
        return Err(contract("probe needs at least one image"));
    }
    let profile = &source.profile;
    let root = RngStream::new(seed, PROBE_STREAM);
    let clean = images
        .par_iter()
        .map(|img| {
            let u = source.encode_bits(img)?;
            let p = psnr(img, &source.decode(&u)?)?;
            Ok((u, p))
        })
        .collect::<Result<Vec<(Codeword, f64)>>>()?;
    (1..=profile.levels())
        .into_par_iter()
        .map(|level| {
            let mut drop = 0.0;
            for (i, (img, (u, clean_psnr))) in images.iter().zip(&clean).enumerate() {
                let mut rng = root.derive_path(&[level as u64, i as u64]);
                let mut bits = u.clone().into_bits();
                bsc_apply(&mut bits[profile.level_range(level)], flip_prob, &mut rng);
                let corrupted = source.decode(&Codeword::new(bits)?)?;
                drop += clean_psnr - psnr(img, &corrupted)?;
            }
            Ok(drop / images.len() as f64)
        })
        .collect()
}

/// Per-level empirical BER of `u → z → AWGN → v` at one SNR, pooling `passes`
/// independent noise draws per image.
pub fn per_level_ber(
    source: &SourceCodecPair,
    channel: &ChannelCodecPair,
    images: &[ImageSample],
    snr_db: f64,
    passes: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if channel.codeword_bits() != source.codeword_bits() {
        return Err(contract(
            "channel codec does not match the source codeword length",
        ));
    }
    if images.is_empty() || passes == 0 {
        return Err(contract(
            "BER estimate needs at least one image and one pass",
        ));
    }
    let sigma2 = sigma2_for_snr(channel.power, snr_db)?;
    let profile = &source.profile;
    let root = RngStream::new(seed, BER_STREAM);
    let counters = images
        .par_iter()
        .enumerate()
        .map(|(i, img)| {
            let u = source.encode_bits(img)?;
            let z = channel.transmit(&u)?;
            let mut counter = LevelErrorCounter::new(profile.levels());
            for pass in 0..passes {
                let mut rng = root.derive_path(&[i as u64, pass as u64]);
                let noise = draw_noise(z.reals().len(), sigma2, &mut rng)?;
                let v = channel.demap_bits(&add_noise(&z, &noise)?)?;
                counter.add(&u, &v, profile)?;
            }
            Ok(counter)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = LevelErrorCounter::new(profile.levels());
    for c in &counters {
        total.merge(c);
    }
    Ok(total.rates())
}
