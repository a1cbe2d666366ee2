//! Scalar and vector quantization.

mod huffman;
mod integrate;
mod lloyd;
mod scalar;
mod uniform;
mod vq;

pub use huffman::{entropy, expected_length, huffman, PrefixCode};
pub use integrate::{integrate, integrate_to_infinity};
pub use lloyd::{lloyd_design, LloydDesign, LloydInit, LloydParams};
pub use scalar::{box_region, distortion, gaussian_cell_probs, BoxRegion, QuantizedVector, ScalarQuantizer};
pub use uniform::{uniform_design, StepGrid, UniformDesign};
pub use vq::{lbg_design, LbgDesign, LbgParams, VectorQuantizer};

/// The distribution a quantizer is designed for or evaluated against.
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    /// An empirical distribution putting mass `1/n` on each sample.
    Samples(&'a [f64]),
    /// Zero-mean Gaussian with standard deviation `sigma`.
    Gaussian { sigma: f64 },
}
