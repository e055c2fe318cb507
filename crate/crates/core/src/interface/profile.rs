//! Reliability profiles: the per-level bit-flip probabilities promised by the interface.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityProfile {
    codeword_bits: usize,
    epsilons: Vec<f64>,
}

impl ReliabilityProfile {
    /// Validated profile: `M` divisible by `N`, every `0 < ε_i < 0.5`, strictly decreasing.
    pub fn new(epsilons: Vec<f64>, codeword_bits: usize) -> Result<Self> {
        let p = Self::arbitrary(epsilons, codeword_bits)?;
        if let Some((i, e)) = p
            .epsilons
            .iter()
            .enumerate()
            .find(|(_, &e)| !(e > 0.0 && e < 0.5))
        {
            return Err(Error::Profile(format!(
                "epsilon for level {} is {e}, must lie in (0, 0.5)",
                i + 1
            )));
        }
        if let Some(i) = p.epsilons.windows(2).position(|w| w[1] >= w[0]) {
            return Err(Error::Profile(format!(
                "epsilons must strictly decrease: level {} ({}) >= level {} ({})",
                i + 2,
                p.epsilons[i + 1],
                i + 1,
                p.epsilons[i]
            )));
        }
        Ok(p)
    }

    /// Profile checked only for shape and `ε_i ∈ [0, 1]`; used for degenerate test media.
    pub fn arbitrary(epsilons: Vec<f64>, codeword_bits: usize) -> Result<Self> {
        let n = epsilons.len();
        if n == 0 {
            return Err(Error::Profile("profile needs at least one level".into()));
        }
        if codeword_bits == 0 || codeword_bits % n != 0 {
            return Err(Error::Profile(format!(
                "codeword length {codeword_bits} must be a positive multiple of the level count {n}"
            )));
        }
        if let Some(e) = epsilons.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::Profile(format!(
                "flip probability {e} outside [0, 1]"
            )));
        }
        Ok(Self {
            codeword_bits,
            epsilons,
        })
    }

    /// `ε_i = ε₁ / (ε₁/ε_N)^((i−1)/(N−1))`: a constant ratio between neighbouring levels.
    pub fn geometric(eps1: f64, eps_n: f64, levels: usize, codeword_bits: usize) -> Result<Self> {
        if !(0.0 < eps_n && eps_n < eps1 && eps1 < 0.5) {
            return Err(Error::Profile(format!(
                "need 0 < eps_N < eps_1 < 0.5, got eps_1={eps1}, eps_N={eps_n}"
            )));
        }
        if levels < 2 {
            return Err(Error::Profile(format!(
                "need at least 2 levels, got {levels}"
            )));
        }
        let ratio = eps1 / eps_n;
        let last = (levels - 1) as f64;
        let epsilons = (0..levels)
            .map(|i| match i {
                0 => eps1,
                i if i + 1 == levels => eps_n,
                i => eps1 / ratio.powf(i as f64 / last),
            })
            .collect();
        let profile = Self::new(epsilons, codeword_bits)?;
        if let Some(w) = profile.sparse_error_warning() {
            log::warn!("{w}");
        }
        Ok(profile)
    }

    pub fn levels(&self) -> usize {
        self.epsilons.len()
    }

    pub fn codeword_bits(&self) -> usize {
        self.codeword_bits
    }

    pub fn bits_per_level(&self) -> usize {
        self.codeword_bits / self.levels()
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    /// Flip probability of 1-based `level`.
    pub fn epsilon(&self, level: usize) -> f64 {
        self.epsilons[level - 1]
    }

    /// Bit positions (0-based, half-open) carried by 1-based `level`.
    pub fn level_range(&self, level: usize) -> std::ops::Range<usize> {
        let b = self.bits_per_level();
        (level - 1) * b..level * b
    }

    /// Set when the most reliable level expects less than one bit error per codeword.
    pub fn sparse_error_warning(&self) -> Option<String> {
        let expected = self.epsilons.last().copied().unwrap_or(0.0) * self.bits_per_level() as f64;
        (expected < 1.0).then(|| {
            format!(
                "most reliable level expects {expected:.4} bit errors per codeword (< 1); \
                 the source mapper may learn to treat it as error-free"
            )
        })
    }

    /// Text form exchanged before a session: `levels`, `codeword_bits`, `epsilons` lines.
    pub fn to_text(&self) -> String {
        let eps: Vec<String> = self.epsilons.iter().map(|e| format!("{e:?}")).collect();
        format!(
            "levels={}\ncodeword_bits={}\nepsilons={}\n",
            self.levels(),
            self.codeword_bits,
            eps.join(",")
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut levels = None;
        let mut bits = None;
        let mut eps = None;
        let mut offset = 0;
        for line in text.lines() {
            let here = offset;
            offset += line.len() + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fmt_err = |msg: String| Error::Format { offset: here, msg };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| fmt_err(format!("expected key=value, got {line:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "levels" => levels = Some(v.parse::<usize>().map_err(|e| fmt_err(e.to_string()))?),
                "codeword_bits" => {
                    bits = Some(v.parse::<usize>().map_err(|e| fmt_err(e.to_string()))?)
                }
                "epsilons" => {
                    eps = Some(
                        v.split(',')
                            .map(|s| s.trim().parse::<f64>())
                            .collect::<std::result::Result<Vec<_>, _>>()
                            .map_err(|e| fmt_err(e.to_string()))?,
                    )
                }
                other => return Err(fmt_err(format!("unknown profile key {other:?}"))),
            }
        }
        let missing = |k: &str| Error::Format {
            offset,
            msg: format!("profile is missing {k}"),
        };
        let levels = levels.ok_or_else(|| missing("levels"))?;
        let bits = bits.ok_or_else(|| missing("codeword_bits"))?;
        let eps = eps.ok_or_else(|| missing("epsilons"))?;
        if eps.len() != levels {
            return Err(Error::Profile(format!(
                "levels={levels} but {} epsilons listed",
                eps.len()
            )));
        }
        Self::new(eps, bits)
    }
}
