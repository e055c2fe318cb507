//! Model bundles: a text header (format version, stage, dims, ε-profile, layer
//! sizes, activation tags) followed by parameter arrays in shortest round-trip
//! decimal form, so save→load→save is byte-identical.

use std::path::Path;

use crate::channel_codec::ChannelCodecPair;
use crate::data::config::RunConfig;
use crate::error::{Error, Result};
use crate::interface::ReliabilityProfile;
use crate::numerics::{Activation, NetworkModel};
use crate::source_codec::{ImageDims, SourceCodecPair};
use crate::training::Stage;

pub const BUNDLE_MAGIC: &str = "splitjscc-model";
pub const BUNDLE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub stage: Stage,
    pub dims: ImageDims,
    pub profile: ReliabilityProfile,
    /// Transmit power budget; channel bundles only.
    pub power: Option<f64>,
    pub mapper: NetworkModel,
    pub demapper: NetworkModel,
}

fn join<T: std::fmt::Debug>(v: &[T]) -> String {
    v.iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn write_network(out: &mut String, name: &str, net: &NetworkModel) {
    out.push_str(&format!("network {name}\n"));
    out.push_str(&format!("layers {}\n", join(net.layer_sizes())));
    out.push_str(&format!(
        "activations {} {}\n",
        net.hidden_activation().tag(),
        net.output_activation().tag()
    ));
    out.push_str(&format!("params {}\n", join(&net.flat_params())));
}

struct Lines<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, offset: usize, msg: impl Into<String>) -> Error {
        Error::Format {
            offset,
            msg: msg.into(),
        }
    }

    /// Next line, which must start with `key`; returns (offset, rest of line).
    fn expect(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let start = self.pos;
        if start >= self.text.len() {
            return Err(self.err(start, format!("unexpected end of bundle, expected {key:?}")));
        }
        let end = self.text[start..]
            .find('\n')
            .map_or(self.text.len(), |i| start + i);
        self.pos = (end + 1).min(self.text.len().max(end + 1));
        let line = &self.text[start..end];
        let (k, rest) = line.split_once(' ').unwrap_or((line, ""));
        if k != key {
            return Err(self.err(start, format!("expected {key:?}, found {k:?}")));
        }
        Ok((start, rest))
    }

    fn values<T: std::str::FromStr>(&self, offset: usize, rest: &str) -> Result<Vec<T>> {
        if rest.is_empty() {
            return Ok(Vec::new());
        }
        rest.split(' ')
            .map(|t| {
                t.parse()
                    .map_err(|_| self.err(offset, format!("invalid number {t:?}")))
            })
            .collect()
    }

    fn network(&mut self, name: &str) -> Result<NetworkModel> {
        let (off, got) = self.expect("network")?;
        if got != name {
            return Err(self.err(off, format!("expected network {name:?}, found {got:?}")));
        }
        let (off, rest) = self.expect("layers")?;
        let sizes: Vec<usize> = self.values(off, rest)?;
        let (off, rest) = self.expect("activations")?;
        let tags: Vec<&str> = rest.split(' ').collect();
        let act = |t: &str| {
            Activation::from_tag(t)
                .ok_or_else(|| self.err(off, format!("unknown activation {t:?}")))
        };
        if tags.len() != 2 {
            return Err(self.err(off, "expected hidden and output activation tags"));
        }
        let (hidden, output) = (act(tags[0])?, act(tags[1])?);
        let mut net = NetworkModel::zeros(&sizes, hidden, output)
            .map_err(|e| self.err(off, e.to_string()))?;
        let (off, rest) = self.expect("params")?;
        let params: Vec<f64> = self.values(off, rest)?;
        net.set_flat_params(&params)
            .map_err(|e| self.err(off, e.to_string()))?;
        Ok(net)
    }
}

impl ModelBundle {
    pub fn from_source(pair: &SourceCodecPair) -> Self {
        Self {
            stage: Stage::Source,
            dims: pair.dims,
            profile: pair.profile.clone(),
            power: None,
            mapper: pair.mapper.clone(),
            demapper: pair.demapper.clone(),
        }
    }

    /// Channel bundles record the interface they were trained against.
    pub fn from_channel(pair: &ChannelCodecPair, source: &SourceCodecPair) -> Self {
        Self {
            stage: Stage::Channel,
            dims: source.dims,
            profile: source.profile.clone(),
            power: Some(pair.power),
            mapper: pair.mapper.clone(),
            demapper: pair.demapper.clone(),
        }
    }

    pub fn into_source(self) -> Result<SourceCodecPair> {
        if self.stage != Stage::Source {
            return Err(Error::Config(
                "bundle holds a channel codec, not a source codec".into(),
            ));
        }
        SourceCodecPair::from_parts(self.mapper, self.demapper, self.profile, self.dims)
    }

    pub fn into_channel(self) -> Result<ChannelCodecPair> {
        if self.stage != Stage::Channel {
            return Err(Error::Config(
                "bundle holds a source codec, not a channel codec".into(),
            ));
        }
        let power = self
            .power
            .ok_or_else(|| Error::Config("channel bundle lacks a power budget".into()))?;
        ChannelCodecPair::from_parts(self.mapper, self.demapper, power)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{BUNDLE_MAGIC} {BUNDLE_VERSION}\n");
        out.push_str(&format!("stage {}\n", self.stage.tag()));
        out.push_str(&format!(
            "dims {} {} {}\n",
            self.dims.height, self.dims.width, self.dims.channels
        ));
        out.push_str(&format!("levels {}\n", self.profile.levels()));
        out.push_str(&format!("codeword_bits {}\n", self.profile.codeword_bits()));
        out.push_str(&format!("epsilons {}\n", join(self.profile.epsilons())));
        if let Some(p) = self.power {
            out.push_str(&format!("power {p:?}\n"));
        }
        write_network(&mut out, "mapper", &self.mapper);
        write_network(&mut out, "demapper", &self.demapper);
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut l = Lines { text, pos: 0 };
        let (off, v) = l.expect(BUNDLE_MAGIC)?;
        let version: u32 = v
            .parse()
            .map_err(|_| l.err(off, format!("invalid bundle version {v:?}")))?;
        if version != BUNDLE_VERSION {
            return Err(l.err(
                off,
                format!("bundle version {version} unsupported (expected {BUNDLE_VERSION})"),
            ));
        }
        let (off, tag) = l.expect("stage")?;
        let stage = match tag {
            "source" => Stage::Source,
            "channel" => Stage::Channel,
            other => return Err(l.err(off, format!("unknown stage {other:?}"))),
        };
        let (off, rest) = l.expect("dims")?;
        let d: Vec<usize> = l.values(off, rest)?;
        if d.len() != 3 {
            return Err(l.err(off, "dims needs height width channels"));
        }
        let dims = ImageDims::new(d[0], d[1], d[2]);
        let (off, rest) = l.expect("levels")?;
        let levels: usize = rest
            .parse()
            .map_err(|_| l.err(off, "invalid level count"))?;
        let (off, rest) = l.expect("codeword_bits")?;
        let bits: usize = rest
            .parse()
            .map_err(|_| l.err(off, "invalid codeword length"))?;
        let (off, rest) = l.expect("epsilons")?;
        let eps: Vec<f64> = l.values(off, rest)?;
        if eps.len() != levels {
            return Err(l.err(off, format!("{} epsilons for {levels} levels", eps.len())));
        }
        let profile =
            ReliabilityProfile::arbitrary(eps, bits).map_err(|e| l.err(off, e.to_string()))?;
        let power = if stage == Stage::Channel {
            let (off, rest) = l.expect("power")?;
            Some(
                rest.parse::<f64>()
                    .map_err(|_| l.err(off, "invalid power"))?,
            )
        } else {
            None
        };
        let mapper = l.network("mapper")?;
        let demapper = l.network("demapper")?;
        l.expect("end")?;
        if l.pos < text.len() {
            return Err(l.err(l.pos, "trailing data after end"));
        }
        let bundle = Self {
            stage,
            dims,
            profile,
            power,
            mapper,
            demapper,
        };
        // Shape checks happen in the codec constructors.
        match stage {
            Stage::Source => drop(bundle.clone().into_source()?),
            Stage::Channel => drop(bundle.clone().into_channel()?),
        }
        Ok(bundle)
    }

    /// Reject bundles that disagree with the run configuration's interface.
    pub fn check_against(&self, config: &RunConfig) -> Result<()> {
        if self.dims != config.dims() {
            return Err(Error::Config(format!(
                "bundle image dims {:?} differ from config {:?}",
                self.dims,
                config.dims()
            )));
        }
        if self.profile.codeword_bits() != config.codeword_bits {
            return Err(Error::Config(format!(
                "bundle codeword length M={} differs from config M={}",
                self.profile.codeword_bits(),
                config.codeword_bits
            )));
        }
        if self.profile != config.profile()? {
            return Err(Error::Config(
                "bundle reliability profile differs from config".into(),
            ));
        }
        if self.stage == Stage::Channel && self.mapper.output_size() != 2 * config.num_symbols {
            return Err(Error::Config(format!(
                "bundle uses K={} channel symbols, config has K={}",
                self.mapper.output_size() / 2,
                config.num_symbols
            )));
        }
        Ok(())
    }
}

pub fn save_model(path: &Path, bundle: &ModelBundle) -> Result<()> {
    std::fs::write(path, bundle.to_text())?;
    Ok(())
}

/// Load a bundle of the given stage and check it against `config`.
pub fn load_model(path: &Path, stage: Stage, config: &RunConfig) -> Result<ModelBundle> {
    let text = std::fs::read_to_string(path)?;
    let bundle = ModelBundle::from_text(&text)?;
    if bundle.stage != stage {
        return Err(Error::Config(format!(
            "{} holds a {} bundle, expected {}",
            path.display(),
            bundle.stage.tag(),
            stage.tag()
        )));
    }
    bundle.check_against(config)?;
    Ok(bundle)
}
