//! Split joint source-channel coding over a multi-level reliability interface.
//!
//! A source codec maps images to binary codewords whose bit levels see different
//! error rates; a channel codec maps those codewords to power-limited complex symbols
//! over AWGN. Both stages are trained with the VIMCO multi-sample gradient estimator.

pub mod channel_codec;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod interface;
pub mod numerics;
pub mod pipeline;
pub mod source_codec;
pub mod training;
pub mod vimco;

pub use error::{Error, Result};
