//! Datasets, run configuration and model persistence.

pub mod config;
pub mod dataset;
pub mod persist;

pub use config::RunConfig;
pub use dataset::{generate_synthetic, Dataset, DatasetHeader, Split};
pub use persist::{load_model, save_model, ModelBundle};
