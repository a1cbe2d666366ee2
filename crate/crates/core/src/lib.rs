//! Quantized compressive sensing toolkit.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] generates sensing matrices and sparse signals and computes the
//!   matrix statistics (μ₁, μ₂, δ_K) used by the distortion bounds.
//! * [`quant`] holds scalar quantizers (Lloyd-Max, optimal uniform), their
//!   cells, Huffman entropy coding and generalized-Lloyd vector quantization.
//! * [`recon`] implements least-squares projections, Subspace Pursuit, Basis
//!   Pursuit and their quantization-aware variants.
//! * [`bounds`] evaluates the asymptotic distortion constants.
//! * [`bench`] runs seeded Monte Carlo experiments and writes CSV tables.
//! * [`io`] reads and writes the plain-text matrix, vector, quantizer and
//!   prefix-code formats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod bounds;
pub mod error;
pub mod io;
pub mod model;
pub mod normal;
pub mod quant;
pub mod recon;
pub mod rng;

pub use error::{Error, Result};
