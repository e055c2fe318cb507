//! Metrics, SNR sweeps, the level-importance probe and the digital baseline.

pub mod baseline;
pub mod metrics;
pub mod sweep;

pub use baseline::{
    digital_baseline_eval, BaselineConfig, BaselineRecord, ChannelCode, Modulation,
};
pub use metrics::{
    bcr, empirical_ber_per_level, psnr, q_function, sigma2_for_snr, snr_db, spearman, PSNR_CAP_DB,
};
pub use sweep::{
    clean_interface_psnr, level_importance_probe, mean_image_psnr, per_level_ber, sweep_eval,
    SweepRecord,
};
