//! Oracles shared by the integration and acceptance tests: exact enumeration of
//! multi-sample objectives, finite differences over codec parameters and
//! Gauss–Hermite quadrature.
#![allow(dead_code)]

use splitjscc::channel_codec::{add_noise, normalize_power, ChannelCodecPair, SymbolBlock};
use splitjscc::interface::{Codeword, ReliabilityProfile};
use splitjscc::numerics::{Activation, NetworkModel, RngStream};
use splitjscc::source_codec::{recon_loglik, ImageDims, ImageSample, SourceCodecPair};

/// All codewords of length `m`, index `k` has bit `i` = bit `i` of `k`.
pub fn all_codewords(m: usize) -> Vec<Codeword> {
    (0..1usize << m)
        .map(|k| Codeword::new((0..m).map(|i| ((k >> i) & 1) as u8).collect()).unwrap())
        .collect()
}

pub fn bernoulli_prob(bits: &[u8], probs: &[f64]) -> f64 {
    bits.iter()
        .zip(probs)
        .map(|(&b, &p)| if b == 1 { p } else { 1.0 - p })
        .product()
}

/// `E[log (1/J) Σ_j exp(l(w^j))]` with `w^j ~ tables[j]` independently, by brute-force
/// enumeration of every J-tuple.
pub fn exact_multisample(tables: &[Vec<f64>], logliks: &[f64]) -> f64 {
    let lmax = logliks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logliks.iter().map(|l| (l - lmax).exp()).collect();
    let ln_j = (tables.len() as f64).ln();
    fn rec(tables: &[Vec<f64>], e: &[f64], prob: f64, sum: f64, base: f64) -> f64 {
        match tables.split_first() {
            None => prob * (base + sum.ln()),
            Some((t, rest)) => t
                .iter()
                .zip(e)
                .filter(|(&p, _)| p > 0.0)
                .map(|(&p, &ei)| rec(rest, e, prob * p, sum + ei, base))
                .sum(),
        }
    }
    rec(tables, &e, 1.0, 0.0, lmax - ln_j)
}

pub fn concat(a: &NetworkModel, b: &NetworkModel) -> Vec<f64> {
    let mut p = a.flat_params();
    p.extend(b.flat_params());
    p
}

pub fn assign(params: &[f64], a: &mut NetworkModel, b: &mut NetworkModel) {
    let (pa, pb) = params.split_at(a.num_params());
    a.set_flat_params(pa).unwrap();
    b.set_flat_params(pb).unwrap();
}

/// Pinned stage-1 instance: 2-pixel image, M=4, N=2, no hidden layers
/// (12 mapper + 10 demapper parameters).
pub fn stage1_instance() -> (SourceCodecPair, ImageSample, f64) {
    let dims = ImageDims::new(1, 2, 1);
    let profile = ReliabilityProfile::new(vec![0.2, 0.05], 4).unwrap();
    let mut rng = RngStream::new(2024, 7);
    let pair = SourceCodecPair::new(dims, profile, &[], &mut rng).unwrap();
    let image = ImageSample::new(dims, vec![40, 210]).unwrap();
    (pair, image, 4.0)
}

pub fn stage1_exact(pair: &SourceCodecPair, image: &ImageSample, beta: f64, j: usize) -> f64 {
    let x = image.normalized();
    let f = pair.mapper.predict(&x).unwrap();
    let profile = &pair.profile;
    let marginal: Vec<f64> = (0..f.len())
        .map(|i| {
            let level = i / profile.bits_per_level() + 1;
            let eps = profile.epsilon(level);
            f[i] * (1.0 - 2.0 * eps) + eps
        })
        .collect();
    let words = all_codewords(f.len());
    let table: Vec<f64> = words
        .iter()
        .map(|w| bernoulli_prob(w.bits(), &marginal))
        .collect();
    let logliks: Vec<f64> = words
        .iter()
        .map(|w| {
            let recon = pair.demapper.predict(&w.bipolar()).unwrap();
            recon_loglik(&x, &recon, beta).unwrap()
        })
        .collect();
    exact_multisample(&vec![table; j], &logliks)
}

/// Pinned stage-2 instance: frozen source codec from the stage-1 instance; channel
/// mapper 4→4 (linear), demapper 4→4 (sigmoid), K=2, 20 parameters each.
pub fn stage2_instance() -> (SourceCodecPair, ChannelCodecPair, ImageSample, f64, f64) {
    let (source, image, beta) = stage1_instance();
    let mut rng = RngStream::new(2024, 8);
    let channel = ChannelCodecPair::new(4, 2, 1.0, &[], &mut rng).unwrap();
    (source, channel, image, beta, 0.5)
}

/// `num_sets` fixed noise sets of `j` vectors each.
pub fn noise_sets(
    num_sets: usize,
    j: usize,
    len: usize,
    sigma2: f64,
    seed: u64,
) -> Vec<Vec<Vec<f64>>> {
    let mut rng = RngStream::new(seed, 99);
    (0..num_sets)
        .map(|_| {
            (0..j)
                .map(|_| splitjscc::channel_codec::draw_noise(len, sigma2, &mut rng).unwrap())
                .collect()
        })
        .collect()
}

/// Exact stage-2 objective for one fixed noise set: Bernoulli sums enumerated.
pub fn stage2_exact(
    source: &SourceCodecPair,
    channel: &ChannelCodecPair,
    image: &ImageSample,
    noise: &[Vec<f64>],
    beta: f64,
) -> f64 {
    let x = image.normalized();
    let u = source.encode_bits(image).unwrap();
    let raw = SymbolBlock::from_reals(channel.mapper.predict(&u.bipolar()).unwrap()).unwrap();
    let z = normalize_power(&raw, channel.power).unwrap();
    let words = all_codewords(channel.codeword_bits());
    let logliks: Vec<f64> = words
        .iter()
        .map(|v| recon_loglik(&x, &source.decode_real(v).unwrap(), beta).unwrap())
        .collect();
    let tables: Vec<Vec<f64>> = noise
        .iter()
        .map(|n| {
            let y = add_noise(&z, n).unwrap();
            let q = channel.demapper.predict(y.reals()).unwrap();
            words.iter().map(|v| bernoulli_prob(v.bits(), &q)).collect()
        })
        .collect();
    exact_multisample(&tables, &logliks)
}

/// Central differences of `f` over the concatenated parameters of two networks.
pub fn fd_over_pair(
    a: &NetworkModel,
    b: &NetworkModel,
    h: f64,
    mut f: impl FnMut(&NetworkModel, &NetworkModel) -> f64,
) -> Vec<f64> {
    let base = concat(a, b);
    let (mut a2, mut b2) = (a.clone(), b.clone());
    splitjscc::numerics::finite_diff_grad(
        |p| {
            assign(p, &mut a2, &mut b2);
            f(&a2, &b2)
        },
        &base,
        h,
    )
}

/// Per-component running mean and variance (Welford).
pub struct MeanVar {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl MeanVar {
    pub fn new(dim: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.n += 1;
        for ((m, s), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let d = v - *m;
            *m += d / self.n as f64;
            *s += d * (v - *m);
        }
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn variance(&self) -> Vec<f64> {
        self.m2.iter().map(|s| s / (self.n - 1) as f64).collect()
    }

    pub fn std_err(&self) -> Vec<f64> {
        self.variance()
            .iter()
            .map(|v| (v / self.n as f64).sqrt())
            .collect()
    }
}

/// Outcome of comparing an estimator mean against an oracle gradient.
#[derive(Debug)]
pub struct Agreement {
    /// Largest |mean − oracle| / SE.
    pub max_z: f64,
    /// Largest relative error over components with |oracle| > threshold.
    pub max_rel: f64,
    pub large_components: usize,
}

pub fn agreement(mv: &MeanVar, oracle: &[f64], threshold: f64) -> Agreement {
    let se = mv.std_err();
    let mut out = Agreement {
        max_z: 0.0,
        max_rel: 0.0,
        large_components: 0,
    };
    for ((&m, &g), &s) in mv.mean().iter().zip(oracle).zip(&se) {
        let diff = (m - g).abs();
        let z = if s > 0.0 {
            diff / s
        } else if diff < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        };
        out.max_z = out.max_z.max(z);
        if g.abs() > threshold {
            out.large_components += 1;
            out.max_rel = out.max_rel.max(diff / g.abs());
        }
    }
    out
}

/// Gauss–Hermite nodes and weights for `∫ e^{−t²} g(t) dt`, by Newton iteration
/// on the orthonormal Hermite recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / (j as f64 + 1.0)).sqrt() * p2
                    - (j as f64 / (j as f64 + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Build a fully connected network with the given parameters.
pub fn network(
    sizes: &[usize],
    hidden: Activation,
    output: Activation,
    params: &[f64],
) -> NetworkModel {
    let mut net = NetworkModel::zeros(sizes, hidden, output).unwrap();
    net.set_flat_params(params).unwrap();
    net
}
