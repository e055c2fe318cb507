//! Multi-sample variational objective and its score-function gradient estimators.
//!
//! Both training stages optimize `E[log (1/J) Σ_j p̃(x | sample_j)]` where the
//! samples are discrete codewords. Gradients with respect to the parameters that
//! shape the sampling distribution use the VIMCO leave-one-out baselines; the
//! decoder gradient is the importance-weighted pathwise gradient.

use crate::channel_codec::{
    add_noise, bernoulli_loglik_grad, draw_noise, normalize_power, normalize_power_backward,
    ChannelCodecPair, SymbolBlock,
};
use crate::error::{contract, Error, Result};
use crate::interface::{medium_apply, medium_loglik_grad, Codeword};
use crate::numerics::{log_sum_exp, RngStream};
use crate::source_codec::{recon_loglik, recon_loglik_grad, ImageSample, SourceCodecPair};

/// Per-sample reconstruction log-likelihoods `log p̃(x | ·)` for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatchStats {
    logliks: Vec<f64>,
}

impl SampleBatchStats {
    pub fn new(logliks: Vec<f64>) -> Result<Self> {
        if logliks.is_empty() {
            return Err(contract("need at least one sample"));
        }
        if let Some(i) = logliks.iter().position(|l| !l.is_finite()) {
            return Err(Error::Training(format!(
                "sample {i} has non-finite log-likelihood {}",
                logliks[i]
            )));
        }
        Ok(Self { logliks })
    }

    pub fn logliks(&self) -> &[f64] {
        &self.logliks
    }

    pub fn num_samples(&self) -> usize {
        self.logliks.len()
    }
}

/// `L̂ = log (1/J) Σ_j exp(loglik_j)`.
pub fn elbo_multisample(stats: &SampleBatchStats) -> f64 {
    log_sum_exp(&stats.logliks) - (stats.num_samples() as f64).ln()
}

/// `c_j = softmax(loglik)_j`.
pub fn importance_weights(stats: &SampleBatchStats) -> Vec<f64> {
    let lse = log_sum_exp(&stats.logliks);
    stats.logliks.iter().map(|l| (l - lse).exp()).collect()
}

/// Leave-one-out learning signals `L̂ − log (1/J)(Σ_{i≠j} exp(l_i) + m_j)`, where the
/// held-out term is replaced by the geometric mean `m_j = exp(mean_{i≠j} l_i)`.
pub fn vimco_baselined_signals(stats: &SampleBatchStats) -> Result<Vec<f64>> {
    let j_count = stats.num_samples();
    if j_count < 2 {
        return Err(contract(
            "leave-one-out baselines need at least two samples",
        ));
    }
    let l = &stats.logliks;
    let total_l: f64 = l.iter().sum();
    let elbo = elbo_multisample(stats);
    let ln_j = (j_count as f64).ln();
    let mut buf = Vec::with_capacity(j_count);
    Ok((0..j_count)
        .map(|j| {
            let log_geo_mean = (total_l - l[j]) / (j_count - 1) as f64;
            buf.clear();
            buf.extend(
                l.iter()
                    .enumerate()
                    .filter(|&(i, _)| i != j)
                    .map(|(_, &v)| v),
            );
            buf.push(log_geo_mean);
            elbo - (log_sum_exp(&buf) - ln_j)
        })
        .collect())
}

/// Which learning signal multiplies each sample's score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// Leave-one-out baselined signals.
    Vimco,
    /// The raw objective `L̂` as a shared coefficient for every sample.
    Naive,
}

fn learning_signals(stats: &SampleBatchStats, estimator: Estimator) -> Result<Vec<f64>> {
    match estimator {
        Estimator::Vimco => vimco_baselined_signals(stats),
        Estimator::Naive => Ok(vec![elbo_multisample(stats); stats.num_samples()]),
    }
}

/// Gradient estimate for one image; ascent directions on `L̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    /// Source mapper (stage 1) or channel mapper (stage 2).
    pub mapper: Vec<f64>,
    /// Source demapper (stage 1) or channel demapper (stage 2).
    pub demapper: Vec<f64>,
    /// `L̂` for the drawn samples.
    pub objective: f64,
}

fn check_finite(what: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Training(format!(
            "{what}: component {i} is {} ({} finite of {})",
            values[i],
            values.iter().filter(|v| v.is_finite()).count(),
            values.len()
        ))),
        None => Ok(()),
    }
}

/// Stage-1 estimate of `∇θ, ∇η L^J(x)` using `samples` draws through the medium.
pub fn stage1_gradients(
    pair: &SourceCodecPair,
    image: &ImageSample,
    samples: usize,
    beta: f64,
    rng: &mut RngStream,
) -> Result<GradientEstimate> {
    stage1_gradients_with(pair, image, samples, beta, Estimator::Vimco, rng)
}

pub fn stage1_gradients_with(
    pair: &SourceCodecPair,
    image: &ImageSample,
    samples: usize,
    beta: f64,
    estimator: Estimator,
    rng: &mut RngStream,
) -> Result<GradientEstimate> {
    if estimator == Estimator::Vimco && samples < 2 {
        return Err(contract("VIMCO needs at least two samples"));
    }
    if samples == 0 {
        return Err(contract("need at least one sample"));
    }
    let x = image.normalized();
    let (probs, mapper_cache) = pair.mapper.forward(&x)?;

    let mut noisy = Vec::with_capacity(samples);
    for _ in 0..samples {
        let u = Codeword::new(probs.iter().map(|&f| u8::from(rng.bernoulli(f))).collect())?;
        noisy.push(medium_apply(&u, &pair.profile, rng)?);
    }
    let mut caches = Vec::with_capacity(samples);
    let mut logliks = Vec::with_capacity(samples);
    for u_hat in &noisy {
        let (recon, cache) = pair.demapper.forward(&u_hat.bipolar())?;
        logliks.push(recon_loglik(&x, &recon, beta)?);
        caches.push((recon, cache));
    }
    let stats = SampleBatchStats::new(logliks)?;
    let signals = learning_signals(&stats, estimator)?;
    let weights = importance_weights(&stats);

    let mut grad_probs = vec![0.0; probs.len()];
    for (u_hat, &s) in noisy.iter().zip(&signals) {
        if s == 0.0 {
            continue;
        }
        for (g, d) in grad_probs
            .iter_mut()
            .zip(medium_loglik_grad(&probs, u_hat, &pair.profile)?)
        {
            *g += s * d;
        }
    }
    let mut mapper = vec![0.0; pair.mapper.num_params()];
    pair.mapper
        .backward_into(&mapper_cache, &grad_probs, &mut mapper)?;

    let mut demapper = vec![0.0; pair.demapper.num_params()];
    for ((recon, cache), &c) in caches.iter().zip(&weights) {
        let g: Vec<f64> = recon_loglik_grad(&x, recon, beta)
            .into_iter()
            .map(|v| c * v)
            .collect();
        pair.demapper.backward_into(cache, &g, &mut demapper)?;
    }
    check_finite("stage-1 mapper gradient", &mapper)?;
    check_finite("stage-1 demapper gradient", &demapper)?;
    Ok(GradientEstimate {
        mapper,
        demapper,
        objective: elbo_multisample(&stats),
    })
}

/// Stage-2 estimate of `∇ψ, ∇φ L^J(x)` with the source codec frozen; noise drawn
/// at `sigma2` per complex symbol.
pub fn stage2_gradients(
    source: &SourceCodecPair,
    channel: &ChannelCodecPair,
    image: &ImageSample,
    sigma2: f64,
    samples: usize,
    beta: f64,
    rng: &mut RngStream,
) -> Result<GradientEstimate> {
    let len = 2 * channel.num_symbols();
    let noise = (0..samples)
        .map(|_| draw_noise(len, sigma2, rng))
        .collect::<Result<Vec<_>>>()?;
    stage2_gradients_with_noise(source, channel, image, &noise, beta, Estimator::Vimco, rng)
}

/// Stage-2 estimate with one explicit noise realization per sample; `rng` only
/// drives the Bernoulli draws of the received codewords.
pub fn stage2_gradients_with_noise(
    source: &SourceCodecPair,
    channel: &ChannelCodecPair,
    image: &ImageSample,
    noise: &[Vec<f64>],
    beta: f64,
    estimator: Estimator,
    rng: &mut RngStream,
) -> Result<GradientEstimate> {
    let samples = noise.len();
    if estimator == Estimator::Vimco && samples < 2 {
        return Err(contract("VIMCO needs at least two samples"));
    }
    if samples == 0 {
        return Err(contract("need at least one sample"));
    }
    if channel.codeword_bits() != source.codeword_bits() {
        return Err(contract(
            "channel codec does not match the source codeword length",
        ));
    }
    let x = image.normalized();
    let u = source.encode_bits(image)?;
    let (raw, mapper_cache) = channel.mapper.forward(&u.bipolar())?;
    let raw = SymbolBlock::from_reals(raw)?;
    let z = normalize_power(&raw, channel.power)?;

    let mut draws = Vec::with_capacity(samples);
    let mut logliks = Vec::with_capacity(samples);
    for n in noise {
        let y = add_noise(&z, n)?;
        let (q, cache) = channel.demapper.forward(y.reals())?;
        let v = Codeword::new(q.iter().map(|&p| u8::from(rng.bernoulli(p))).collect())?;
        let recon = source.decode_real(&v)?;
        logliks.push(recon_loglik(&x, &recon, beta)?);
        draws.push((q, cache, v));
    }
    let stats = SampleBatchStats::new(logliks)?;
    let signals = learning_signals(&stats, estimator)?;

    let mut demapper = vec![0.0; channel.demapper.num_params()];
    let mut grad_z = vec![0.0; z.reals().len()];
    for ((q, cache, v), &s) in draws.iter().zip(&signals) {
        if s == 0.0 {
            continue;
        }
        let g: Vec<f64> = bernoulli_loglik_grad(v.bits(), q)
            .into_iter()
            .map(|d| s * d)
            .collect();
        let gy = channel.demapper.backward_into(cache, &g, &mut demapper)?;
        for (a, b) in grad_z.iter_mut().zip(gy) {
            *a += b;
        }
    }
    let grad_raw = normalize_power_backward(&raw, &grad_z, channel.power)?;
    let mut mapper = vec![0.0; channel.mapper.num_params()];
    channel
        .mapper
        .backward_into(&mapper_cache, &grad_raw, &mut mapper)?;
    check_finite("stage-2 mapper gradient", &mapper)?;
    check_finite("stage-2 demapper gradient", &demapper)?;
    Ok(GradientEstimate {
        mapper,
        demapper,
        objective: elbo_multisample(&stats),
    })
}
