//! Source mapper (image → bit probabilities → bits) and source demapper
//! (bits → reconstructed image).

use crate::error::{contract, Result};
use crate::interface::{Codeword, ReliabilityProfile};
use crate::numerics::{Activation, NetworkModel, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImageDims {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl ImageDims {
    pub fn new(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
        }
    }

    pub fn num_values(&self) -> usize {
        self.height * self.width * self.channels
    }
}

/// An 8-bit image stored H×W×C row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageSample {
    dims: ImageDims,
    pixels: Vec<u8>,
}

impl ImageSample {
    pub fn new(dims: ImageDims, pixels: Vec<u8>) -> Result<Self> {
        if dims.num_values() == 0 {
            return Err(contract("image dimensions must be positive"));
        }
        if pixels.len() != dims.num_values() {
            return Err(contract(format!(
                "image {}x{}x{} needs {} pixels, got {}",
                dims.height,
                dims.width,
                dims.channels,
                dims.num_values(),
                pixels.len()
            )));
        }
        Ok(Self { dims, pixels })
    }

    /// Quantize values in `[0, 1]` to 8 bits, rounding half up.
    pub fn from_normalized(dims: ImageDims, values: &[f64]) -> Result<Self> {
        let pixels = values
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8)
            .collect();
        Self::new(dims, pixels)
    }

    pub fn dims(&self) -> ImageDims {
        self.dims
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn normalized(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| p as f64 / 255.0).collect()
    }
}

/// `−β Σ (x − x̂)²` over normalized pixels.
pub fn recon_loglik(x: &[f64], recon: &[f64], beta: f64) -> Result<f64> {
    if x.len() != recon.len() {
        return Err(contract(format!(
            "image has {} values, reconstruction {}",
            x.len(),
            recon.len()
        )));
    }
    Ok(-beta
        * x.iter()
            .zip(recon)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>())
}

/// Gradient of [`recon_loglik`] with respect to the reconstruction.
pub fn recon_loglik_grad(x: &[f64], recon: &[f64], beta: f64) -> Vec<f64> {
    x.iter()
        .zip(recon)
        .map(|(a, b)| 2.0 * beta * (a - b))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceCodecPair {
    pub mapper: NetworkModel,
    pub demapper: NetworkModel,
    pub profile: ReliabilityProfile,
    pub dims: ImageDims,
}

impl SourceCodecPair {
    /// Randomly initialized pair with the given hidden layer widths.
    pub fn new(
        dims: ImageDims,
        profile: ReliabilityProfile,
        hidden: &[usize],
        rng: &mut RngStream,
    ) -> Result<Self> {
        let n = dims.num_values();
        let m = profile.codeword_bits();
        let sizes = |a: usize, b: usize| -> Vec<usize> {
            std::iter::once(a)
                .chain(hidden.iter().copied())
                .chain(std::iter::once(b))
                .collect()
        };
        let mapper = NetworkModel::new(&sizes(n, m), Activation::Relu, Activation::Sigmoid, rng)?;
        let demapper = NetworkModel::new(&sizes(m, n), Activation::Relu, Activation::Sigmoid, rng)?;
        Self::from_parts(mapper, demapper, profile, dims)
    }

    pub fn from_parts(
        mapper: NetworkModel,
        demapper: NetworkModel,
        profile: ReliabilityProfile,
        dims: ImageDims,
    ) -> Result<Self> {
        let m = profile.codeword_bits();
        if mapper.input_size() != dims.num_values() || demapper.output_size() != dims.num_values() {
            return Err(contract(
                "source codec networks do not match the image size",
            ));
        }
        if mapper.output_size() != m || demapper.input_size() != m {
            return Err(contract(format!(
                "source codec networks do not match codeword length {m}"
            )));
        }
        if mapper.output_activation() != Activation::Sigmoid
            || demapper.output_activation() != Activation::Sigmoid
        {
            return Err(contract("source codec networks need sigmoid outputs"));
        }
        Ok(Self {
            mapper,
            demapper,
            profile,
            dims,
        })
    }

    pub fn codeword_bits(&self) -> usize {
        self.profile.codeword_bits()
    }

    fn check_image(&self, image: &ImageSample) -> Result<()> {
        if image.dims() != self.dims {
            return Err(contract(format!(
                "image dims {:?} do not match codec dims {:?}",
                image.dims(),
                self.dims
            )));
        }
        Ok(())
    }

    /// Per-bit probabilities of a 1, clamped away from 0 and 1.
    pub fn encode_probs(&self, image: &ImageSample) -> Result<Vec<f64>> {
        self.check_image(image)?;
        self.mapper.predict(&image.normalized())
    }

    /// Most likely codeword: elementwise rounding of the probabilities.
    pub fn encode_bits(&self, image: &ImageSample) -> Result<Codeword> {
        Ok(Codeword::from_probs(&self.encode_probs(image)?))
    }

    /// Real-valued reconstruction in `[0, 1]`.
    pub fn decode_real(&self, bits: &Codeword) -> Result<Vec<f64>> {
        if bits.len() != self.codeword_bits() {
            return Err(contract(format!(
                "codeword has {} bits, codec expects {}",
                bits.len(),
                self.codeword_bits()
            )));
        }
        self.demapper.predict(&bits.bipolar())
    }

    pub fn decode(&self, bits: &Codeword) -> Result<ImageSample> {
        ImageSample::from_normalized(self.dims, &self.decode_real(bits)?)
    }
}
