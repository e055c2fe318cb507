//! Dense numerics: tensors, small MLPs, Adam and seeded random streams.

pub mod adam;
pub mod finite_diff;
pub mod network;
pub mod rng;
pub mod tensor;

pub use adam::{OptimizerState, PlateauPolicy};
pub use finite_diff::finite_diff_grad;
pub use network::{sigmoid, Activation, ForwardCache, NetworkModel, PROB_CLAMP};
pub use rng::RngStream;
pub use tensor::Tensor;

/// `log(Σ exp(xs))`, stable for large magnitudes.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
