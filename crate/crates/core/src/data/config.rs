//! Run configuration as a flat `key = value` text document.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys, repeated keys
//! and unparsable values are errors.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::evaluation::baseline::{BaselineConfig, ChannelCode, Modulation};
use crate::interface::ReliabilityProfile;
use crate::source_codec::ImageDims;
use crate::training::{Stage, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub dataset_count: usize,
    pub levels: usize,
    pub codeword_bits: usize,
    pub eps_first: f64,
    pub eps_last: f64,
    pub num_symbols: usize,
    pub power: f64,
    pub snr_train_db: f64,
    pub source_hidden: Vec<usize>,
    pub channel_hidden: Vec<usize>,
    pub samples: usize,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub source_beta: f64,
    pub channel_beta: f64,
    pub seed: u64,
    pub split_train: f64,
    pub split_validation: f64,
    pub split_evaluation: f64,
    pub eval_images: usize,
    pub probe_flip_prob: f64,
    /// Noise draws per image in the per-level BER report.
    pub ber_passes: usize,
    pub baseline_bits_per_pixel: u32,
    pub baseline_code: ChannelCode,
    pub baseline_modulation: Modulation,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            height: 8,
            width: 8,
            channels: 1,
            dataset_count: 2000,
            levels: 10,
            codeword_bits: 80,
            eps_first: 0.4,
            eps_last: 0.001,
            num_symbols: 16,
            power: 1.0,
            snr_train_db: 10.0,
            source_hidden: vec![256],
            channel_hidden: vec![256],
            samples: 10,
            batch_size: 32,
            max_epochs: 50,
            learning_rate: 1e-3,
            source_beta: 1.0,
            channel_beta: 1.0,
            seed: 0,
            split_train: 0.8,
            split_validation: 0.1,
            split_evaluation: 0.1,
            eval_images: 200,
            probe_flip_prob: 0.5,
            ber_passes: 10,
            baseline_bits_per_pixel: 4,
            baseline_code: ChannelCode::Hamming74,
            baseline_modulation: Modulation::Qam16,
        }
    }
}

fn list(v: &[usize]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

impl RunConfig {
    pub fn dims(&self) -> ImageDims {
        ImageDims::new(self.height, self.width, self.channels)
    }

    pub fn profile(&self) -> Result<ReliabilityProfile> {
        ReliabilityProfile::geometric(
            self.eps_first,
            self.eps_last,
            self.levels,
            self.codeword_bits,
        )
        .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn train_config(&self, stage: Stage) -> TrainConfig {
        TrainConfig {
            stage,
            samples: self.samples,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            learning_rate: self.learning_rate,
            beta: match stage {
                Stage::Source => self.source_beta,
                Stage::Channel => self.channel_beta,
            },
            seed: self.seed,
            snr_train_db: self.snr_train_db,
        }
    }

    pub fn baseline(&self) -> BaselineConfig {
        BaselineConfig {
            bits_per_pixel: self.baseline_bits_per_pixel,
            code: self.baseline_code,
            modulation: self.baseline_modulation,
            power: self.power,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims().num_values() == 0 {
            return Err(Error::Config("image dimensions must be positive".into()));
        }
        if self.num_symbols == 0 || !(self.power > 0.0) {
            return Err(Error::Config(
                "num_symbols and power must be positive".into(),
            ));
        }
        let splits = [
            self.split_train,
            self.split_validation,
            self.split_evaluation,
        ];
        if splits.iter().any(|r| !(0.0..=1.0).contains(r))
            || (splits.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::Config(format!(
                "split ratios {splits:?} must sum to 1"
            )));
        }
        if self.ber_passes == 0 || self.eval_images == 0 {
            return Err(Error::Config(
                "ber_passes and eval_images must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.probe_flip_prob) {
            return Err(Error::Config("probe_flip_prob must lie in [0, 1]".into()));
        }
        self.profile()?;
        for stage in [Stage::Source, Stage::Channel] {
            self.train_config(stage)
                .validate()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        self.baseline()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        kv("height", self.height.to_string());
        kv("width", self.width.to_string());
        kv("channels", self.channels.to_string());
        kv("dataset_count", self.dataset_count.to_string());
        kv("levels", self.levels.to_string());
        kv("codeword_bits", self.codeword_bits.to_string());
        kv("eps_first", format!("{:?}", self.eps_first));
        kv("eps_last", format!("{:?}", self.eps_last));
        kv("num_symbols", self.num_symbols.to_string());
        kv("power", format!("{:?}", self.power));
        kv("snr_train_db", format!("{:?}", self.snr_train_db));
        kv("source_hidden", list(&self.source_hidden));
        kv("channel_hidden", list(&self.channel_hidden));
        kv("samples", self.samples.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("max_epochs", self.max_epochs.to_string());
        kv("learning_rate", format!("{:?}", self.learning_rate));
        kv("source_beta", format!("{:?}", self.source_beta));
        kv("channel_beta", format!("{:?}", self.channel_beta));
        kv("seed", self.seed.to_string());
        kv("split_train", format!("{:?}", self.split_train));
        kv("split_validation", format!("{:?}", self.split_validation));
        kv("split_evaluation", format!("{:?}", self.split_evaluation));
        kv("eval_images", self.eval_images.to_string());
        kv("probe_flip_prob", format!("{:?}", self.probe_flip_prob));
        kv("ber_passes", self.ber_passes.to_string());
        kv(
            "baseline_bits_per_pixel",
            self.baseline_bits_per_pixel.to_string(),
        );
        kv("baseline_code", self.baseline_code.tag().to_string());
        kv(
            "baseline_modulation",
            self.baseline_modulation.tag().to_string(),
        );
        s
    }

    /// Parse over the defaults; keys not mentioned keep their default value.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        let mut seen = BTreeSet::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!(
                    "line {}: duplicate key {key}",
                    no + 1
                )));
            }
            match key {
                "height" => c.height = parse(key, value)?,
                "width" => c.width = parse(key, value)?,
                "channels" => c.channels = parse(key, value)?,
                "dataset_count" => c.dataset_count = parse(key, value)?,
                "levels" => c.levels = parse(key, value)?,
                "codeword_bits" => c.codeword_bits = parse(key, value)?,
                "eps_first" => c.eps_first = parse(key, value)?,
                "eps_last" => c.eps_last = parse(key, value)?,
                "num_symbols" => c.num_symbols = parse(key, value)?,
                "power" => c.power = parse(key, value)?,
                "snr_train_db" => c.snr_train_db = parse(key, value)?,
                "source_hidden" => c.source_hidden = parse_list(key, value)?,
                "channel_hidden" => c.channel_hidden = parse_list(key, value)?,
                "samples" => c.samples = parse(key, value)?,
                "batch_size" => c.batch_size = parse(key, value)?,
                "max_epochs" => c.max_epochs = parse(key, value)?,
                "learning_rate" => c.learning_rate = parse(key, value)?,
                "source_beta" => c.source_beta = parse(key, value)?,
                "channel_beta" => c.channel_beta = parse(key, value)?,
                "seed" => c.seed = parse(key, value)?,
                "split_train" => c.split_train = parse(key, value)?,
                "split_validation" => c.split_validation = parse(key, value)?,
                "split_evaluation" => c.split_evaluation = parse(key, value)?,
                "eval_images" => c.eval_images = parse(key, value)?,
                "probe_flip_prob" => c.probe_flip_prob = parse(key, value)?,
                "ber_passes" => c.ber_passes = parse(key, value)?,
                "baseline_bits_per_pixel" => c.baseline_bits_per_pixel = parse(key, value)?,
                "baseline_code" => {
                    c.baseline_code = ChannelCode::from_tag(value)
                        .ok_or_else(|| Error::Config(format!("unknown channel code {value:?}")))?
                }
                "baseline_modulation" => {
                    c.baseline_modulation = Modulation::from_tag(value)
                        .ok_or_else(|| Error::Config(format!("unknown modulation {value:?}")))?
                }
                other => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key {other:?}",
                        no + 1
                    )))
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }
}
