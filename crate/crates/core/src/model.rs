//! Sensing matrices, sparse signals and the matrix statistics μ₁, μ₂ and δ_K.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::quant::ScalarQuantizer;
use crate::rng::{self, domain, Gaussian};
use crate::{Error, Result};

/// How a [`MeasurementMatrix`] came to be.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatrixMode {
    /// Entries i.i.d. `N(0, 1/m)`.
    IidScaled,
    /// Standard Gaussian entries, every column scaled to unit Euclidean norm.
    ColumnNormalized,
    /// Entrywise scalar quantization of a matrix of the inner mode.
    Quantized(Box<MatrixMode>),
    /// Entries supplied by the caller.
    Explicit,
}

/// The generator modes accepted by [`gen_gaussian_matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenMode {
    IidScaled,
    #[default]
    ColumnNormalized,
}

impl From<GenMode> for MatrixMode {
    fn from(m: GenMode) -> Self {
        match m {
            GenMode::IidScaled => MatrixMode::IidScaled,
            GenMode::ColumnNormalized => MatrixMode::ColumnNormalized,
        }
    }
}

impl fmt::Display for MatrixMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixMode::IidScaled => f.write_str("iid_scaled"),
            MatrixMode::ColumnNormalized => f.write_str("column_normalized"),
            MatrixMode::Quantized(inner) => write!(f, "quantized({inner})"),
            MatrixMode::Explicit => f.write_str("explicit"),
        }
    }
}

impl FromStr for MatrixMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "iid_scaled" => Ok(MatrixMode::IidScaled),
            "column_normalized" => Ok(MatrixMode::ColumnNormalized),
            "explicit" => Ok(MatrixMode::Explicit),
            _ => {
                if let Some(inner) = s.strip_prefix("quantized(").and_then(|r| r.strip_suffix(')')) {
                    Ok(MatrixMode::Quantized(Box::new(inner.parse()?)))
                } else {
                    Err(Error::Parse(format!("unknown matrix mode `{s}`")))
                }
            }
        }
    }
}

impl FromStr for GenMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "iid_scaled" => Ok(GenMode::IidScaled),
            "column_normalized" => Ok(GenMode::ColumnNormalized),
            other => Err(Error::Parse(format!("unknown generator mode `{other}`"))),
        }
    }
}

/// A dense `m × N` sensing operator.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    entries: DMatrix<f64>,
    mode: MatrixMode,
    seed: Option<u64>,
}

impl MeasurementMatrix {
    /// Wraps caller-supplied entries. All entries must be finite.
    pub fn from_entries(entries: DMatrix<f64>, mode: MatrixMode, seed: Option<u64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::InvalidDimensions(format!(
                "{}x{} matrix",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDimensions("non-finite matrix entry".into()));
        }
        Ok(Self { entries, mode, seed })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn mode(&self) -> &MatrixMode {
        &self.mode
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// The `m × |T|` submatrix of the columns indexed by `support`.
    pub fn columns(&self, support: &[usize]) -> DMatrix<f64> {
        self.entries.select_columns(support)
    }
}

/// A length-`N` vector with an explicit support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    values: DVector<f64>,
    support: Vec<usize>,
}

impl SparseSignal {
    /// Builds a signal from its values on a sorted support; every entry off the
    /// support is zero.
    pub fn new(len: usize, support: Vec<usize>, support_values: &[f64]) -> Result<Self> {
        if support.len() != support_values.len() {
            return Err(Error::DimensionMismatch { expected: support.len(), actual: support_values.len() });
        }
        if !support.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidDimensions("support must be strictly increasing".into()));
        }
        if support.last().is_some_and(|&j| j >= len) {
            return Err(Error::SparsityOutOfRange { k: support.len(), n: len });
        }
        let mut values = DVector::zeros(len);
        for (&j, &v) in support.iter().zip(support_values) {
            values[j] = v;
        }
        Ok(Self { values, support })
    }

    /// Support taken to be the nonzero entries.
    pub fn from_dense(values: DVector<f64>) -> Self {
        let support = values.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, _)| j).collect();
        Self { values, support }
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn gen_gaussian_matrix(m: usize, n: usize, seed: u64, mode: GenMode) -> Result<MeasurementMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidDimensions(format!("{m}x{n} matrix")));
    }
    let mut g = Gaussian::new(rng::keyed_rng(seed, domain::MATRIX, 0));
    // Column-major fill: column j consumes draws j*m .. (j+1)*m.
    let mut entries = DMatrix::<f64>::zeros(m, n);
    g.fill(entries.as_mut_slice());
    match mode {
        GenMode::IidScaled => entries /= (m as f64).sqrt(),
        GenMode::ColumnNormalized => {
            for mut col in entries.column_iter_mut() {
                let norm = col.norm();
                col /= norm;
            }
        }
    }
    Ok(MeasurementMatrix { entries, mode: mode.into(), seed: Some(seed) })
}

/// Exactly `k`-sparse signal: uniform support, i.i.d. standard normal nonzeros.
pub fn gen_sparse_signal(n: usize, k: usize, seed: u64) -> Result<SparseSignal> {
    if k > n {
        return Err(Error::SparsityOutOfRange { k, n });
    }
    let mut rng = rng::keyed_rng(seed, domain::SIGNAL, 0);
    let support = rng::random_subset(&mut rng, n, k);
    let mut g = Gaussian::new(rng);
    let mut vals = vec![0.0; k];
    g.fill(&mut vals);
    // a standard normal draw is exactly zero with probability zero, but keep the invariant
    for v in &mut vals {
        while *v == 0.0 {
            *v = g.sample();
        }
    }
    SparseSignal::new(n, support, &vals)
}

/// `y = Φx`, accumulated over the support of `x`.
pub fn measure(phi: &MeasurementMatrix, x: &SparseSignal) -> Result<DVector<f64>> {
    if x.len() != phi.cols() {
        return Err(Error::DimensionMismatch { expected: phi.cols(), actual: x.len() });
    }
    let mut y = DVector::zeros(phi.rows());
    for &j in x.support() {
        y.axpy(x.values()[j], &phi.entries.column(j), 1.0);
    }
    Ok(y)
}

/// μ₁ = (1/N) Σ φ²ᵢⱼ.
pub fn mu1(phi: &MeasurementMatrix) -> f64 {
    phi.entries.iter().map(|v| v * v).sum::<f64>() / phi.cols() as f64
}

/// μ₂ = max over rows i and K-subsets T of (m/K) Σ_{j∈T} φ²ᵢⱼ.
///
/// The maximum separates per row: the best T for row i is that row's K
/// largest squared entries.
pub fn mu2(phi: &MeasurementMatrix, k: usize) -> Result<f64> {
    let (m, n) = (phi.rows(), phi.cols());
    if k == 0 || k > n {
        return Err(Error::SparsityOutOfRange { k, n });
    }
    let mut best = 0.0f64;
    let mut row = vec![0.0; n];
    for i in 0..m {
        for (j, r) in row.iter_mut().enumerate() {
            let v = phi.entries[(i, j)];
            *r = v * v;
        }
        row.sort_unstable_by(|a, b| b.total_cmp(a));
        best = best.max(row[..k].iter().sum());
    }
    Ok(m as f64 / k as f64 * best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RipMode {
    /// Every support of size K; refuses when C(N, K) exceeds `cap`.
    Exact { cap: u64 },
    /// `trials` uniformly random supports.
    Sampled { trials: usize, seed: u64 },
}

impl RipMode {
    pub const DEFAULT_CAP: u64 = 1_000_000;
    pub const DEFAULT_TRIALS: usize = 10_000;

    pub fn exact() -> Self {
        RipMode::Exact { cap: Self::DEFAULT_CAP }
    }

    pub fn sampled(seed: u64) -> Self {
        RipMode::Sampled { trials: Self::DEFAULT_TRIALS, seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RipEstimate {
    pub delta: f64,
    /// True when only a subset of supports was evaluated.
    pub is_lower_bound: bool,
    pub supports_evaluated: u64,
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Advances `idx` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn support_deviation(gram: &DMatrix<f64>, support: &[usize], sub: &mut DMatrix<f64>) -> f64 {
    for (a, &ja) in support.iter().enumerate() {
        for (b, &jb) in support.iter().enumerate() {
            sub[(a, b)] = gram[(ja, jb)];
        }
    }
    let eig = SymmetricEigen::new(sub.clone()).eigenvalues;
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (1.0 - lo).max(hi - 1.0)
}

/// Restricted isometry constant δ_K, the largest deviation of an eigenvalue of
/// Φ_T*Φ_T from one over the evaluated supports.
pub fn rip_delta(phi: &MeasurementMatrix, k: usize, mode: RipMode) -> Result<RipEstimate> {
    let n = phi.cols();
    if k == 0 || k > n {
        return Err(Error::SparsityOutOfRange { k, n });
    }
    let gram = phi.entries.transpose() * &phi.entries;
    let mut sub = DMatrix::zeros(k, k);
    match mode {
        RipMode::Exact { cap } => {
            let needed = binomial(n, k);
            if needed > cap as u128 {
                return Err(Error::EnumerationCap { needed, cap });
            }
            let mut idx: Vec<usize> = (0..k).collect();
            let mut delta = f64::NEG_INFINITY;
            let mut count = 0u64;
            loop {
                delta = delta.max(support_deviation(&gram, &idx, &mut sub));
                count += 1;
                if !next_combination(&mut idx, n) {
                    break;
                }
            }
            Ok(RipEstimate { delta, is_lower_bound: false, supports_evaluated: count })
        }
        RipMode::Sampled { trials, seed } => {
            let mut rng = rng::keyed_rng(seed, domain::RIP_SAMPLING, 0);
            let mut delta = f64::NEG_INFINITY;
            for _ in 0..trials.max(1) {
                let t = rng::random_subset(&mut rng, n, k);
                delta = delta.max(support_deviation(&gram, &t, &mut sub));
            }
            Ok(RipEstimate { delta, is_lower_bound: true, supports_evaluated: trials.max(1) as u64 })
        }
    }
}

/// Applies `q` to every entry.
pub fn quantize_matrix(phi: &MeasurementMatrix, q: &ScalarQuantizer) -> MeasurementMatrix {
    let entries = phi.entries.map(|v| q.apply(v).0);
    MeasurementMatrix { entries, mode: MatrixMode::Quantized(Box::new(phi.mode.clone())), seed: phi.seed }
}
