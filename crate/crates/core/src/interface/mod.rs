//! The multi-level reliability interface between source and channel codecs.

pub mod medium;
pub mod packet;
pub mod profile;

pub use medium::{bsc_apply, medium_apply, medium_loglik, medium_loglik_grad, Codeword};
pub use packet::{decode_stream, encode_stream, pack, unpack, InterfacePacket};
pub use profile::ReliabilityProfile;
