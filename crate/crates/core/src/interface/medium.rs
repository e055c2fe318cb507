//! The multi-level BER medium: parallel binary symmetric channels, one per level,
//! and the exact log-likelihood of a noisy codeword under a Bernoulli encoder.

use crate::error::{contract, Result};
use crate::interface::profile::ReliabilityProfile;
use crate::numerics::{RngStream, PROB_CLAMP};

/// A binary vector; every entry is 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Codeword(Vec<u8>);

impl Codeword {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(i) = bits.iter().position(|&b| b > 1) {
            return Err(contract(format!("bit {i} is {}, expected 0 or 1", bits[i])));
        }
        Ok(Self(bits))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    /// Round each probability to a bit; exactly 0.5 rounds to 1.
    pub fn from_probs(probs: &[f64]) -> Self {
        Self(probs.iter().map(|&p| u8::from(p >= 0.5)).collect())
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] ^= 1;
    }

    /// Network input view: 0 ↦ −1, 1 ↦ +1.
    pub fn bipolar(&self) -> Vec<f64> {
        self.0
            .iter()
            .map(|&b| if b == 1 { 1.0 } else { -1.0 })
            .collect()
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.0
    }

    pub(crate) fn bits_mut(&mut self) -> &mut [u8] {
        &mut self.0
    }
}

/// Flip each bit independently with probability `epsilon`.
pub fn bsc_apply(bits: &mut [u8], epsilon: f64, rng: &mut RngStream) {
    if epsilon <= 0.0 {
        return;
    }
    for b in bits {
        if epsilon >= 1.0 || rng.uniform() < epsilon {
            *b ^= 1;
        }
    }
}

/// Pass each level's bits through its own BSC.
pub fn medium_apply(
    codeword: &Codeword,
    profile: &ReliabilityProfile,
    rng: &mut RngStream,
) -> Result<Codeword> {
    check_len(codeword.len(), profile)?;
    let mut out = codeword.clone();
    for level in 1..=profile.levels() {
        let range = profile.level_range(level);
        bsc_apply(&mut out.bits_mut()[range], profile.epsilon(level), rng);
    }
    Ok(out)
}

fn check_len(len: usize, profile: &ReliabilityProfile) -> Result<()> {
    if len != profile.codeword_bits() {
        return Err(contract(format!(
            "codeword has {len} bits, profile expects {}",
            profile.codeword_bits()
        )));
    }
    Ok(())
}

fn clamp_prob(f: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f) {
        return Err(contract(format!("encoder probability {f} outside [0, 1]")));
    }
    Ok(f.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP))
}

/// `log p(û | x)` for a Bernoulli(f) codeword observed through the medium:
/// each received bit is 1 with probability `f(1−2ε) + ε`.
pub fn medium_loglik(
    encoder_probs: &[f64],
    noisy: &Codeword,
    profile: &ReliabilityProfile,
) -> Result<f64> {
    check_len(encoder_probs.len(), profile)?;
    check_len(noisy.len(), profile)?;
    let mut total = 0.0;
    for level in 1..=profile.levels() {
        let eps = profile.epsilon(level);
        for j in profile.level_range(level) {
            let f = clamp_prob(encoder_probs[j])?;
            total += if noisy.bits()[j] == 1 {
                (f * (1.0 - 2.0 * eps) + eps).ln()
            } else {
                ((1.0 - eps) + f * (2.0 * eps - 1.0)).ln()
            };
        }
    }
    Ok(total)
}

/// Partial derivatives of [`medium_loglik`] with respect to each encoder probability.
pub fn medium_loglik_grad(
    encoder_probs: &[f64],
    noisy: &Codeword,
    profile: &ReliabilityProfile,
) -> Result<Vec<f64>> {
    check_len(encoder_probs.len(), profile)?;
    check_len(noisy.len(), profile)?;
    let mut grad = vec![0.0; encoder_probs.len()];
    for level in 1..=profile.levels() {
        let eps = profile.epsilon(level);
        let slope = 1.0 - 2.0 * eps;
        for j in profile.level_range(level) {
            let f = clamp_prob(encoder_probs[j])?;
            let p1 = f * slope + eps;
            grad[j] = if noisy.bits()[j] == 1 {
                slope / p1
            } else {
                -slope / (1.0 - p1)
            };
        }
    }
    Ok(grad)
}
