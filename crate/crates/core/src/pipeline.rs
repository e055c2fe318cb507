//! Shared plumbing for the CLI and end-to-end runs: dataset splits, seeded
//! initialization and the two training stages driven by a [`RunConfig`].

use crate::channel_codec::ChannelCodecPair;
use crate::data::{Dataset, RunConfig};
use crate::error::{Error, Result};
use crate::numerics::RngStream;
use crate::source_codec::{ImageSample, SourceCodecPair};
use crate::training::{train_stage1, train_stage2, Stage, TrainingLog};

// Initialization stream tags, disjoint from the training and evaluation streams.
const SOURCE_INIT_STREAM: u64 = 0x1001;
const CHANNEL_INIT_STREAM: u64 = 0x1002;

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Vec<ImageSample>,
    pub validation: Vec<ImageSample>,
    /// Evaluation split truncated to `eval_images`.
    pub evaluation: Vec<ImageSample>,
}

pub fn split_dataset(dataset: &Dataset, config: &RunConfig) -> Result<Splits> {
    if dataset.dims != config.dims() {
        return Err(Error::Config(format!(
            "dataset dims {:?} differ from config {:?}",
            dataset.dims,
            config.dims()
        )));
    }
    let split = dataset.split(
        config.split_validation,
        config.split_evaluation,
        config.seed,
    );
    let mut evaluation = dataset.select(&split.evaluation);
    evaluation.truncate(config.eval_images);
    Ok(Splits {
        train: dataset.select(&split.train),
        validation: dataset.select(&split.validation),
        evaluation,
    })
}

pub fn require(images: &[ImageSample], what: &str) -> Result<()> {
    if images.is_empty() {
        return Err(Error::Config(format!("{what} split is empty")));
    }
    Ok(())
}

pub fn init_source(config: &RunConfig) -> Result<SourceCodecPair> {
    let mut rng = RngStream::new(config.seed, SOURCE_INIT_STREAM);
    SourceCodecPair::new(
        config.dims(),
        config.profile()?,
        &config.source_hidden,
        &mut rng,
    )
}

pub fn init_channel(config: &RunConfig) -> Result<ChannelCodecPair> {
    let mut rng = RngStream::new(config.seed, CHANNEL_INIT_STREAM);
    ChannelCodecPair::new(
        config.codeword_bits,
        config.num_symbols,
        config.power,
        &config.channel_hidden,
        &mut rng,
    )
}

pub fn run_stage1(config: &RunConfig, splits: &Splits) -> Result<(SourceCodecPair, TrainingLog)> {
    require(&splits.train, "training")?;
    require(&splits.validation, "validation")?;
    train_stage1(
        init_source(config)?,
        &splits.train,
        &splits.validation,
        &config.train_config(Stage::Source),
    )
}

pub fn run_stage2(
    config: &RunConfig,
    splits: &Splits,
    source: &SourceCodecPair,
) -> Result<(ChannelCodecPair, TrainingLog)> {
    require(&splits.train, "training")?;
    require(&splits.validation, "validation")?;
    train_stage2(
        source,
        init_channel(config)?,
        &splits.train,
        &splits.validation,
        &config.train_config(Stage::Channel),
    )
}
