//! Channel mapper (bits → power-normalized complex symbols), the AWGN channel and
//! the channel demapper (received symbols → bit probabilities → bits).

use crate::error::{contract, Error, Result};
use crate::interface::Codeword;
use crate::numerics::{log_sum_exp, Activation, NetworkModel, RngStream};

/// `K` complex symbols stored as `2K` interleaved reals (re, im, re, im, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    reals: Vec<f64>,
}

impl SymbolBlock {
    pub fn from_reals(reals: Vec<f64>) -> Result<Self> {
        if reals.len() % 2 != 0 {
            return Err(contract(format!(
                "symbol block needs an even number of reals, got {}",
                reals.len()
            )));
        }
        Ok(Self { reals })
    }

    pub fn reals(&self) -> &[f64] {
        &self.reals
    }

    pub fn num_symbols(&self) -> usize {
        self.reals.len() / 2
    }

    /// Symbol `k` as `(re, im)`.
    pub fn symbol(&self, k: usize) -> (f64, f64) {
        (self.reals[2 * k], self.reals[2 * k + 1])
    }

    /// `zᴴz`.
    pub fn energy(&self) -> f64 {
        self.reals.iter().map(|v| v * v).sum()
    }

    /// `(1/K) Σ |z_k|²`.
    pub fn average_power(&self) -> f64 {
        self.energy() / self.num_symbols() as f64
    }
}

/// Scale the block so its average power is exactly `power`.
pub fn normalize_power(block: &SymbolBlock, power: f64) -> Result<SymbolBlock> {
    let energy = block.energy();
    if energy <= 0.0 || !energy.is_finite() {
        return Err(Error::Degenerate(format!(
            "cannot normalize a symbol block with energy {energy}"
        )));
    }
    let scale = (block.num_symbols() as f64 * power / energy).sqrt();
    SymbolBlock::from_reals(block.reals.iter().map(|v| v * scale).collect())
}

/// Jacobian-transpose product of [`normalize_power`] at the unnormalized `block`.
///
/// With `c = sqrt(K·P̄)` the map is `z ↦ c·z/‖z‖`, whose Jacobian is
/// `(c/‖z‖)(I − z zᵀ/‖z‖²)`; it is symmetric, so the same matrix applies upstream.
pub fn normalize_power_backward(
    block: &SymbolBlock,
    upstream: &[f64],
    power: f64,
) -> Result<Vec<f64>> {
    if upstream.len() != block.reals.len() {
        return Err(contract(
            "upstream gradient length does not match the block",
        ));
    }
    let energy = block.energy();
    if energy <= 0.0 {
        return Err(Error::Degenerate("zero-energy symbol block".into()));
    }
    let norm = energy.sqrt();
    let c = (block.num_symbols() as f64 * power).sqrt();
    let proj: f64 = block
        .reals
        .iter()
        .zip(upstream)
        .map(|(z, g)| z * g)
        .sum::<f64>()
        / energy;
    Ok(block
        .reals
        .iter()
        .zip(upstream)
        .map(|(z, g)| c / norm * (g - z * proj))
        .collect())
}

/// Complex Gaussian noise of total variance `sigma2` per symbol (`sigma2/2` per real part).
pub fn awgn(block: &SymbolBlock, sigma2: f64, rng: &mut RngStream) -> Result<SymbolBlock> {
    let noise = draw_noise(block.reals.len(), sigma2, rng)?;
    add_noise(block, &noise)
}

/// A noise realization for a block of `len` reals.
pub fn draw_noise(len: usize, sigma2: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
    if !(sigma2 >= 0.0) {
        return Err(contract(format!(
            "noise variance {sigma2} must be nonnegative"
        )));
    }
    if sigma2 == 0.0 {
        return Ok(vec![0.0; len]);
    }
    let std = (sigma2 / 2.0).sqrt();
    Ok((0..len).map(|_| std * rng.standard_normal()).collect())
}

pub fn add_noise(block: &SymbolBlock, noise: &[f64]) -> Result<SymbolBlock> {
    if noise.len() != block.reals.len() {
        return Err(contract("noise length does not match the block"));
    }
    SymbolBlock::from_reals(block.reals.iter().zip(noise).map(|(z, n)| z + n).collect())
}

/// `Σ_j v_j ln q_j + (1 − v_j) ln(1 − q_j)`.
pub fn bernoulli_loglik(bits: &[u8], probs: &[f64]) -> f64 {
    bits.iter()
        .zip(probs)
        .map(|(&v, &q)| if v == 1 { q.ln() } else { (1.0 - q).ln() })
        .sum()
}

/// Gradient of [`bernoulli_loglik`] with respect to the probabilities.
pub fn bernoulli_loglik_grad(bits: &[u8], probs: &[f64]) -> Vec<f64> {
    bits.iter()
        .zip(probs)
        .map(|(&v, &q)| if v == 1 { 1.0 / q } else { -1.0 / (1.0 - q) })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelCodecPair {
    pub mapper: NetworkModel,
    pub demapper: NetworkModel,
    pub power: f64,
}

impl ChannelCodecPair {
    pub fn new(
        codeword_bits: usize,
        num_symbols: usize,
        power: f64,
        hidden: &[usize],
        rng: &mut RngStream,
    ) -> Result<Self> {
        let sizes = |a: usize, b: usize| -> Vec<usize> {
            std::iter::once(a)
                .chain(hidden.iter().copied())
                .chain(std::iter::once(b))
                .collect()
        };
        let mapper = NetworkModel::new(
            &sizes(codeword_bits, 2 * num_symbols),
            Activation::Relu,
            Activation::Linear,
            rng,
        )?;
        let demapper = NetworkModel::new(
            &sizes(2 * num_symbols, codeword_bits),
            Activation::Relu,
            Activation::Sigmoid,
            rng,
        )?;
        Self::from_parts(mapper, demapper, power)
    }

    pub fn from_parts(mapper: NetworkModel, demapper: NetworkModel, power: f64) -> Result<Self> {
        if mapper.output_size() % 2 != 0 || mapper.output_size() != demapper.input_size() {
            return Err(contract(
                "channel mapper/demapper symbol dimensions disagree",
            ));
        }
        if mapper.input_size() != demapper.output_size() {
            return Err(contract(
                "channel mapper/demapper codeword lengths disagree",
            ));
        }
        if demapper.output_activation() != Activation::Sigmoid {
            return Err(contract("channel demapper needs a sigmoid output"));
        }
        if !(power > 0.0) {
            return Err(contract(format!("power budget {power} must be positive")));
        }
        Ok(Self {
            mapper,
            demapper,
            power,
        })
    }

    pub fn codeword_bits(&self) -> usize {
        self.mapper.input_size()
    }

    pub fn num_symbols(&self) -> usize {
        self.mapper.output_size() / 2
    }

    /// Unnormalized symbols: output reals `(2k, 2k+1)` form symbol `k`.
    pub fn map_to_symbols(&self, codeword: &Codeword) -> Result<SymbolBlock> {
        if codeword.len() != self.codeword_bits() {
            return Err(contract(format!(
                "codeword has {} bits, channel codec expects {}",
                codeword.len(),
                self.codeword_bits()
            )));
        }
        SymbolBlock::from_reals(self.mapper.predict(&codeword.bipolar())?)
    }

    /// Mapper output followed by power normalization.
    pub fn transmit(&self, codeword: &Codeword) -> Result<SymbolBlock> {
        normalize_power(&self.map_to_symbols(codeword)?, self.power)
    }

    pub fn demap_probs(&self, received: &SymbolBlock) -> Result<Vec<f64>> {
        self.demapper.predict(received.reals())
    }

    pub fn demap_bits(&self, received: &SymbolBlock) -> Result<Codeword> {
        Ok(Codeword::from_probs(&self.demap_probs(received)?))
    }

    /// Monte Carlo estimate of `log E_n[p(v | h(u) + n)]`, averaging in the log domain.
    pub fn channel_loglik(
        &self,
        u: &Codeword,
        v: &Codeword,
        sigma2: f64,
        num_noise_samples: usize,
        rng: &mut RngStream,
    ) -> Result<f64> {
        if num_noise_samples == 0 {
            return Err(contract("need at least one noise sample"));
        }
        if v.len() != self.codeword_bits() {
            return Err(contract("received codeword length mismatch"));
        }
        let z = self.transmit(u)?;
        let terms = (0..num_noise_samples)
            .map(|_| {
                let y = awgn(&z, sigma2, rng)?;
                Ok(bernoulli_loglik(v.bits(), &self.demap_probs(&y)?))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(log_sum_exp(&terms) - (num_noise_samples as f64).ln())
    }
}
