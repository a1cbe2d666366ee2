//! Subspace Pursuit and its quantization-aware variant.

use nalgebra::DVector;

use super::cproj::{constrained_projection_with, CprojParams};
use super::lstsq::Projector;
use crate::model::{MeasurementMatrix, SparseSignal};
use crate::quant::BoxRegion;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Halt {
    /// The residual norm went up; the previous support was kept.
    ResidualIncreased,
    /// The support repeated, so every later iteration would too.
    FixedPoint,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct SpTrace {
    /// `‖y_r^ℓ‖` for each accepted support, initial support first.
    pub residual_norms: Vec<f64>,
    pub supports: Vec<Vec<usize>>,
    pub halt: Halt,
    pub iterations: usize,
    /// Set when `2K > m`.
    pub oversparse: bool,
}

#[derive(Debug, Clone)]
pub struct SpResult {
    pub x: SparseSignal,
    pub trace: SpTrace,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpParams {
    /// `None` means `3K`.
    pub max_iter: Option<usize>,
    pub cproj: CprojParams,
}

/// The `k` largest-magnitude entries of `v` over `candidates`, ties to the
/// lower index, returned sorted.
fn top_k(v: impl Fn(usize) -> f64, candidates: &[usize], k: usize) -> Vec<usize> {
    let mut c: Vec<(f64, usize)> = candidates.iter().map(|&j| (v(j).abs(), j)).collect();
    c.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<usize> = c.into_iter().take(k).map(|(_, j)| j).collect();
    out.sort_unstable();
    out
}

struct Fit {
    coeff: DVector<f64>,
    resid: DVector<f64>,
}

/// The projection pair (`pcoeff`, `resid`) Algorithm 1 is run with.
trait Operators {
    fn target(&self) -> &DVector<f64>;
    fn fit(&self, phi: &MeasurementMatrix, support: &[usize]) -> Result<Fit>;
}

struct Plain<'a> {
    y: &'a DVector<f64>,
}

impl Operators for Plain<'_> {
    fn target(&self) -> &DVector<f64> {
        self.y
    }

    fn fit(&self, phi: &MeasurementMatrix, support: &[usize]) -> Result<Fit> {
        let p = Projector::for_support(phi.entries(), support)?;
        Ok(Fit { coeff: p.coeff(self.y), resid: p.resid(self.y) })
    }
}

struct Quantized<'a> {
    y_hat: &'a DVector<f64>,
    region: &'a BoxRegion,
    params: CprojParams,
}

impl Operators for Quantized<'_> {
    fn target(&self) -> &DVector<f64> {
        self.y_hat
    }

    fn fit(&self, phi: &MeasurementMatrix, support: &[usize]) -> Result<Fit> {
        let p = Projector::for_support(phi.entries(), support)?;
        let cp = constrained_projection_with(&p, self.region, self.y_hat, &self.params)?;
        Ok(Fit { coeff: cp.x, resid: cp.resid })
    }
}

fn subspace_pursuit<O: Operators>(phi: &MeasurementMatrix, ops: &O, k: usize, params: &SpParams) -> Result<SpResult> {
    let (m, n) = (phi.rows(), phi.cols());
    let y = ops.target();
    if y.len() != m {
        return Err(Error::DimensionMismatch { expected: m, actual: y.len() });
    }
    if k == 0 || k > n {
        return Err(Error::SparsityOutOfRange { k, n });
    }
    let max_iter = params.max_iter.unwrap_or(3 * k);
    let all: Vec<usize> = (0..n).collect();
    let a = phi.entries();

    let corr = a.tr_mul(y);
    let mut support = top_k(|j| corr[j], &all, k);
    let mut fit = ops.fit(phi, &support)?;
    let mut norm = fit.resid.norm();
    let mut trace = SpTrace {
        residual_norms: vec![norm],
        supports: vec![support.clone()],
        halt: Halt::MaxIter,
        iterations: 0,
        oversparse: 2 * k > m,
    };
    while trace.iterations < max_iter {
        trace.iterations += 1;
        let corr = a.tr_mul(&fit.resid);
        let mut expanded = support.clone();
        expanded.extend(top_k(|j| corr[j], &all, k));
        expanded.sort_unstable();
        expanded.dedup();
        let wide = ops.fit(phi, &expanded)?;
        let next = top_k(|j| wide.coeff[expanded.binary_search(&j).unwrap()], &expanded, k);
        if next == support {
            trace.halt = Halt::FixedPoint;
            break;
        }
        let next_fit = ops.fit(phi, &next)?;
        let next_norm = next_fit.resid.norm();
        if next_norm > norm {
            trace.halt = Halt::ResidualIncreased;
            break;
        }
        (support, fit, norm) = (next, next_fit, next_norm);
        trace.residual_norms.push(norm);
        trace.supports.push(support.clone());
    }
    let x = SparseSignal::new(n, support, fit.coeff.as_slice())?;
    Ok(SpResult { x, trace })
}

pub fn sp_reconstruct(phi: &MeasurementMatrix, y: &DVector<f64>, k: usize, params: &SpParams) -> Result<SpResult> {
    subspace_pursuit(phi, &Plain { y }, k, params)
}

/// Algorithm 1 with the least-squares projection replaced by the constrained
/// projection onto the quantization cell `region` of `y_hat`.
pub fn qsp_reconstruct(
    phi: &MeasurementMatrix,
    region: &BoxRegion,
    y_hat: &DVector<f64>,
    k: usize,
    params: &SpParams,
) -> Result<SpResult> {
    if region.dim() != y_hat.len() {
        return Err(Error::DimensionMismatch { expected: region.dim(), actual: y_hat.len() });
    }
    subspace_pursuit(phi, &Quantized { y_hat, region, params: params.cproj }, k, params)
}
