//! Command-line driver for the split JSCC pipeline.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use splitjscc::channel_codec::ChannelCodecPair;
use splitjscc::data::dataset::Dataset;
use splitjscc::data::{generate_synthetic, load_model, save_model, ModelBundle, RunConfig};
use splitjscc::evaluation::baseline::baseline_csv;
use splitjscc::evaluation::sweep::{parse_snr_range, sweep_csv};
use splitjscc::evaluation::{
    clean_interface_psnr, digital_baseline_eval, level_importance_probe, per_level_ber, sweep_eval,
};
use splitjscc::interface::{decode_stream, encode_stream, pack, unpack, Codeword};
use splitjscc::pipeline::{require, run_stage1, run_stage2, split_dataset, Splits};
use splitjscc::source_codec::SourceCodecPair;
use splitjscc::training::Stage;
use splitjscc::{Error, Result};

#[derive(Parser)]
#[command(
    name = "splitjscc",
    version,
    about = "Split JSCC over a multi-level reliability interface"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// key = value configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset file.
    GenData {
        #[command(flatten)]
        common: Common,
        /// Overrides the config image count.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Stage 1: train the source codec against the BER medium.
    TrainSource {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        /// Training log CSV.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Stage 2: train the channel codec with the source codec frozen.
    TrainChannel {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// PSNR and per-level BER over an SNR range.
    EvalSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        channel: PathBuf,
        /// start:stop:step in dB.
        #[arg(long, default_value = "0:20:2")]
        snr: String,
    },
    /// Mean PSNR drop when one level's bits are corrupted.
    ProbeLevels {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        source: PathBuf,
    },
    /// Per-level empirical BER at the training SNR next to the nominal profile.
    BerReport {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        channel: PathBuf,
    },
    /// Quantizer + Hamming + QAM reference chain over an SNR range.
    BaselineEval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "0:20:2")]
        snr: String,
    },
    /// Frame a codeword (text of 0/1 characters) into interface packets.
    Pack {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        session: u32,
    },
    /// Reassemble a codeword from a packet stream.
    Unpack {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Profile(_) => 2,
        Error::Format { .. }
        | Error::Io(_)
        | Error::Protocol(_)
        | Error::IncompleteSession { .. }
        | Error::Contract(_) => 3,
        Error::Training(_) | Error::Degenerate(_) => 4,
    }
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut config = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn load_data(path: &Path, config: &RunConfig) -> Result<Splits> {
    split_dataset(&Dataset::from_bytes(&std::fs::read(path)?)?, config)
}

fn load_source(path: &Path, config: &RunConfig) -> Result<SourceCodecPair> {
    load_model(path, Stage::Source, config)?.into_source()
}

fn load_channel(path: &Path, config: &RunConfig) -> Result<ChannelCodecPair> {
    load_model(path, Stage::Channel, config)?.into_channel()
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, bytes)?;
    info!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData { common, count } => {
            let config = load_config(&common)?;
            let n = count.unwrap_or(config.dataset_count);
            let data = generate_synthetic(n, config.dims(), config.seed)?;
            write(&common.out, data.to_bytes())
        }
        Command::TrainSource { common, data, log } => {
            let config = load_config(&common)?;
            let splits = load_data(&data, &config)?;
            let (pair, tlog) = run_stage1(&config, &splits)?;
            info!(
                "stage 1 best validation objective {:.4} at epoch {}",
                tlog.best_validation, tlog.best_epoch
            );
            if let Some(p) = log {
                write(&p, tlog.to_csv())?;
            }
            save_model(&common.out, &ModelBundle::from_source(&pair))
        }
        Command::TrainChannel {
            common,
            data,
            source,
            log,
        } => {
            let config = load_config(&common)?;
            let splits = load_data(&data, &config)?;
            let source = load_source(&source, &config)?;
            let (pair, tlog) = run_stage2(&config, &splits, &source)?;
            info!(
                "stage 2 best validation objective {:.4} at epoch {}",
                tlog.best_validation, tlog.best_epoch
            );
            if let Some(p) = log {
                write(&p, tlog.to_csv())?;
            }
            save_model(&common.out, &ModelBundle::from_channel(&pair, &source))
        }
        Command::EvalSweep {
            common,
            data,
            source,
            channel,
            snr,
        } => {
            let config = load_config(&common)?;
            let snrs = parse_snr_range(&snr).map_err(|e| Error::Config(e.to_string()))?;
            let splits = load_data(&data, &config)?;
            require(&splits.evaluation, "evaluation")?;
            let source = load_source(&source, &config)?;
            let channel = load_channel(&channel, &config)?;
            let records = sweep_eval(
                &source,
                &channel,
                &splits.evaluation,
                &snrs,
                splits.evaluation.len(),
                config.seed,
            )?;
            write(&common.out, sweep_csv(&records))
        }
        Command::ProbeLevels {
            common,
            data,
            source,
        } => {
            let config = load_config(&common)?;
            let splits = load_data(&data, &config)?;
            require(&splits.evaluation, "evaluation")?;
            let source = load_source(&source, &config)?;
            let clean = clean_interface_psnr(&source, &splits.evaluation)?;
            let drops = level_importance_probe(
                &source,
                &splits.evaluation,
                config.probe_flip_prob,
                config.seed,
            )?;
            let mut out = String::from("level,epsilon,psnr_drop_db,clean_psnr_db\n");
            for (i, d) in drops.iter().enumerate() {
                out.push_str(&format!(
                    "{},{:?},{:.6},{:.6}\n",
                    i + 1,
                    source.profile.epsilon(i + 1),
                    d,
                    clean
                ));
            }
            write(&common.out, out)
        }
        Command::BerReport {
            common,
            data,
            source,
            channel,
        } => {
            let config = load_config(&common)?;
            let splits = load_data(&data, &config)?;
            require(&splits.evaluation, "evaluation")?;
            let source = load_source(&source, &config)?;
            let channel = load_channel(&channel, &config)?;
            let ber = per_level_ber(
                &source,
                &channel,
                &splits.evaluation,
                config.snr_train_db,
                config.ber_passes,
                config.seed,
            )?;
            let mut out = String::from("level,epsilon,empirical_ber\n");
            for (i, b) in ber.iter().enumerate() {
                out.push_str(&format!(
                    "{},{:?},{:.6}\n",
                    i + 1,
                    source.profile.epsilon(i + 1),
                    b
                ));
            }
            write(&common.out, out)
        }
        Command::BaselineEval { common, data, snr } => {
            let config = load_config(&common)?;
            let snrs = parse_snr_range(&snr).map_err(|e| Error::Config(e.to_string()))?;
            let splits = load_data(&data, &config)?;
            require(&splits.evaluation, "evaluation")?;
            let records =
                digital_baseline_eval(&config.baseline(), &splits.evaluation, &snrs, config.seed)?;
            write(&common.out, baseline_csv(&records))
        }
        Command::Pack {
            common,
            input,
            session,
        } => {
            let config = load_config(&common)?;
            let text = std::fs::read_to_string(&input)?;
            let bits = text
                .trim()
                .char_indices()
                .map(|(i, c)| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    _ => Err(Error::Format {
                        offset: i,
                        msg: format!("expected 0 or 1, found {c:?}"),
                    }),
                })
                .collect::<Result<Vec<u8>>>()?;
            let packets = pack(&Codeword::new(bits)?, &config.profile()?, session)?;
            write(&common.out, encode_stream(&packets))
        }
        Command::Unpack { common, input } => {
            let config = load_config(&common)?;
            let packets = decode_stream(&std::fs::read(&input)?)?;
            let cw = unpack(&packets, &config.profile()?)?;
            let mut text: String = cw
                .bits()
                .iter()
                .map(|&b| if b == 1 { '1' } else { '0' })
                .collect();
            text.push('\n');
            write(&common.out, text)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
