//! Training loops for both stages: minibatch VIMCO gradients, Adam ascent on the
//! multi-sample objective, plateau learning-rate decay and early stopping on the
//! validation objective.

use std::time::Instant;

use rayon::prelude::*;

use crate::channel_codec::ChannelCodecPair;
use crate::error::{contract, Error, Result};
use crate::evaluation::metrics::sigma2_for_snr;
use crate::numerics::{NetworkModel, OptimizerState, RngStream};
use crate::source_codec::{ImageSample, SourceCodecPair};
use crate::vimco::{stage1_gradients, stage2_gradients, GradientEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Source,
    Channel,
}

impl Stage {
    pub fn tag(self) -> &'static str {
        match self {
            Stage::Source => "source",
            Stage::Channel => "channel",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub stage: Stage,
    /// VIMCO samples per image.
    pub samples: usize,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub learning_rate: f64,
    /// Inverse temperature of the Gaussian reconstruction likelihood.
    pub beta: f64,
    pub seed: u64,
    /// Training SNR in dB (channel stage only).
    pub snr_train_db: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            stage: Stage::Source,
            samples: 10,
            batch_size: 32,
            max_epochs: 50,
            learning_rate: 1e-3,
            beta: 1.0,
            seed: 0,
            snr_train_db: 10.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::Config(
                "VIMCO needs at least 2 samples per image".into(),
            ));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config(
                "batch size and epoch cap must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0) || !(self.beta > 0.0) {
            return Err(Error::Config(
                "learning rate and beta must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_objective: f64,
    pub validation_objective: f64,
    pub learning_rate: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingLog {
    /// Validation objective before the first update.
    pub initial_validation: f64,
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (0 = initialization).
    pub best_epoch: usize,
    pub best_validation: f64,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("epoch,train_objective,validation_objective,learning_rate,wall_seconds\n");
        out.push_str(&format!("0,,{:.6},,0.000\n", self.initial_validation));
        for r in &self.epochs {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:e},{:.3}\n",
                r.epoch, r.train_objective, r.validation_objective, r.learning_rate, r.wall_seconds
            ));
        }
        out
    }
}

// Stream tags keep training, validation and initialization draws disjoint.
const TRAIN_STREAM: u64 = 1;
const VALIDATION_STREAM: u64 = 2;

fn concat(a: &NetworkModel, b: &NetworkModel) -> Vec<f64> {
    let mut p = a.flat_params();
    p.extend(b.flat_params());
    p
}

fn split_into(params: &[f64], a: &mut NetworkModel, b: &mut NetworkModel) -> Result<()> {
    let (pa, pb) = params.split_at(a.num_params());
    a.set_flat_params(pa)?;
    b.set_flat_params(pb)
}

/// Generic epoch loop shared by both stages. `estimate` computes the per-image
/// gradient for the current models; `validate` the mean validation objective.
fn run_training<M, E, V>(
    models: &mut M,
    parts: fn(&mut M) -> (&mut NetworkModel, &mut NetworkModel),
    train: &[ImageSample],
    config: &TrainConfig,
    estimate: E,
    validate: V,
) -> Result<TrainingLog>
where
    M: Clone + Sync,
    E: Fn(&M, &ImageSample, &mut RngStream) -> Result<GradientEstimate> + Sync,
    V: Fn(&M) -> Result<f64>,
{
    config.validate()?;
    if train.is_empty() {
        return Err(contract("training set is empty"));
    }
    let root = RngStream::new(config.seed, TRAIN_STREAM);
    let (a, b) = parts(models);
    let mut params = concat(a, b);
    let mapper_len = a.num_params();
    let mut opt = OptimizerState::new(params.len(), config.learning_rate);

    let initial = validate(models)?;
    opt.plateau_schedule(-initial);
    let mut log = TrainingLog {
        initial_validation: initial,
        epochs: Vec::new(),
        best_epoch: 0,
        best_validation: initial,
    };
    let mut best = models.clone();
    let start = Instant::now();

    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=config.max_epochs {
        root.derive_path(&[epoch as u64, u64::MAX])
            .shuffle(&mut order);
        let mut objective_sum = 0.0;
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            let snapshot: &M = models;
            let estimates = batch
                .par_iter()
                .map(|&i| {
                    let mut rng = root.derive_path(&[epoch as u64, batch_idx as u64, i as u64]);
                    estimate(snapshot, &train[i], &mut rng)
                })
                .collect::<Result<Vec<_>>>()?;
            // Descent on −L̂, accumulated in batch order.
            let scale = -1.0 / batch.len() as f64;
            let mut grads = vec![0.0; params.len()];
            for est in &estimates {
                objective_sum += est.objective;
                let (gm, gd) = grads.split_at_mut(mapper_len);
                for (g, v) in gm.iter_mut().zip(&est.mapper) {
                    *g += scale * v;
                }
                for (g, v) in gd.iter_mut().zip(&est.demapper) {
                    *g += scale * v;
                }
            }
            opt.adam_step(&mut params, &grads)
                .map_err(|e| Error::Training(format!("epoch {epoch}, batch {batch_idx}: {e}")))?;
            let (a, b) = parts(models);
            split_into(&params, a, b)?;
        }
        let validation = validate(models)?;
        if !validation.is_finite() {
            return Err(Error::Training(format!(
                "epoch {epoch}: validation objective is {validation}"
            )));
        }
        if validation > log.best_validation {
            log.best_validation = validation;
            log.best_epoch = epoch;
            best = models.clone();
        }
        let (lr, stop) = opt.plateau_schedule(-validation);
        log.epochs.push(EpochRecord {
            epoch,
            train_objective: objective_sum / train.len() as f64,
            validation_objective: validation,
            learning_rate: lr,
            wall_seconds: start.elapsed().as_secs_f64(),
        });
        log::info!(
            "{} epoch {epoch}: train {:.4} val {validation:.4} lr {lr:.2e}",
            config.stage.tag(),
            objective_sum / train.len() as f64
        );
        if stop {
            break;
        }
    }
    *models = best;
    Ok(log)
}

/// Mean `L̂` over `images`, with the same draws on every call.
pub fn source_validation_objective(
    pair: &SourceCodecPair,
    images: &[ImageSample],
    samples: usize,
    beta: f64,
    seed: u64,
) -> Result<f64> {
    if images.is_empty() {
        return Err(contract("validation set is empty"));
    }
    let root = RngStream::new(seed, VALIDATION_STREAM);
    let total = images
        .par_iter()
        .enumerate()
        .map(|(i, img)| {
            let mut rng = root.derive(i as u64);
            stage1_gradients(pair, img, samples, beta, &mut rng).map(|e| e.objective)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(total.iter().sum::<f64>() / images.len() as f64)
}

pub fn channel_validation_objective(
    source: &SourceCodecPair,
    channel: &ChannelCodecPair,
    images: &[ImageSample],
    sigma2: f64,
    samples: usize,
    beta: f64,
    seed: u64,
) -> Result<f64> {
    if images.is_empty() {
        return Err(contract("validation set is empty"));
    }
    let root = RngStream::new(seed, VALIDATION_STREAM);
    let total = images
        .par_iter()
        .enumerate()
        .map(|(i, img)| {
            let mut rng = root.derive(i as u64);
            stage2_gradients(source, channel, img, sigma2, samples, beta, &mut rng)
                .map(|e| e.objective)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(total.iter().sum::<f64>() / images.len() as f64)
}

/// Train the source mapper/demapper against the multi-level BER medium.
/// Returns the parameters with the best validation objective.
pub fn train_stage1(
    init: SourceCodecPair,
    train: &[ImageSample],
    validation: &[ImageSample],
    config: &TrainConfig,
) -> Result<(SourceCodecPair, TrainingLog)> {
    if config.stage != Stage::Source {
        return Err(Error::Config(
            "train_stage1 needs a source-stage config".into(),
        ));
    }
    let mut pair = init;
    let log = run_training(
        &mut pair,
        |p| (&mut p.mapper, &mut p.demapper),
        train,
        config,
        |p, img, rng| stage1_gradients(p, img, config.samples, config.beta, rng),
        |p| source_validation_objective(p, validation, config.samples, config.beta, config.seed),
    )?;
    Ok((pair, log))
}

/// Train the channel mapper/demapper over AWGN at `config.snr_train_db`, with the
/// source codec frozen.
pub fn train_stage2(
    source: &SourceCodecPair,
    init: ChannelCodecPair,
    train: &[ImageSample],
    validation: &[ImageSample],
    config: &TrainConfig,
) -> Result<(ChannelCodecPair, TrainingLog)> {
    if config.stage != Stage::Channel {
        return Err(Error::Config(
            "train_stage2 needs a channel-stage config".into(),
        ));
    }
    if init.codeword_bits() != source.codeword_bits() {
        return Err(contract(
            "channel codec does not match the frozen source codeword length",
        ));
    }
    let sigma2 = sigma2_for_snr(init.power, config.snr_train_db)?;
    let mut channel = init;
    let log = run_training(
        &mut channel,
        |c| (&mut c.mapper, &mut c.demapper),
        train,
        config,
        |c, img, rng| stage2_gradients(source, c, img, sigma2, config.samples, config.beta, rng),
        |c| {
            channel_validation_objective(
                source,
                c,
                validation,
                sigma2,
                config.samples,
                config.beta,
                config.seed,
            )
        },
    )?;
    Ok((channel, log))
}
