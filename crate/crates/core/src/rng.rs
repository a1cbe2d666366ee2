//! Keyed, counter-based random streams.
//!
//! Every stream is a ChaCha20 keystream whose key packs `(seed, domain)` and
//! whose 64-bit stream id is `index`. Trial `i` of an experiment therefore
//! derives its randomness directly from `(master_seed, i)` without consuming
//! any other trial's stream, so the order in which trials run is irrelevant.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Stream domains. Distinct domains never share keystream.
pub mod domain {
    pub const MATRIX: u64 = 1;
    pub const SIGNAL: u64 = 2;
    pub const TRAINING: u64 = 3;
    pub const CLT: u64 = 4;
    pub const RIP_SAMPLING: u64 = 5;
    pub const INIT: u64 = 6;
    pub const GAUSSIAN_SAMPLES: u64 = 7;
}

pub fn keyed_rng(seed: u64, domain: u64, index: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Derives an independent 64-bit seed from `(master, domain, index)`.
pub fn derive_seed(master: u64, domain: u64, index: u64) -> u64 {
    keyed_rng(master, domain, index).next_u64()
}

/// Standard normal variates by the Box-Muller transform.
///
/// Uniforms come from the 53-bit `f64` conversion of the underlying stream;
/// `u1` is taken from `(0, 1]` so the logarithm is always finite.
#[derive(Debug, Clone)]
pub struct Gaussian<R> {
    rng: R,
    spare: Option<f64>,
}

impl<R: RngCore> Gaussian<R> {
    pub fn new(rng: R) -> Self {
        Self { rng, spare: None }
    }

    pub fn sample(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.rng.random::<f64>();
        let u2 = self.rng.random::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.sample();
        }
    }

    pub fn rng_mut(&mut self) -> &mut R {
        &mut self.rng
    }
}

/// Uniformly random `k`-subset of `0..n`, sorted ascending (partial Fisher-Yates).
pub fn random_subset<R: RngCore>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    debug_assert!(k <= n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    let mut out = pool[..k].to_vec();
    out.sort_unstable();
    out
}
