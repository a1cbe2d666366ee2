//! Asymptotic distortion constants and the bounds built from them.

use std::f64::consts::{E, LN_2, PI};
use std::fmt;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub name: String,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    /// The scaling of the distortion the bounds refer to.
    pub normalization: String,
    pub flags: Vec<String>,
}

impl BoundReport {
    fn new(name: &str, lower: Option<f64>, upper: Option<f64>, normalization: &str) -> Self {
        Self { name: name.into(), lower, upper, normalization: normalization.into(), flags: Vec::new() }
    }

    fn flag(mut self, f: &str) -> Self {
        self.flags.push(f.into());
        self
    }

    pub fn csv_header() -> &'static str {
        "name,lower,upper,normalization,flags"
    }

    /// One CSV row; missing bounds are empty fields, flags are `;`-joined.
    pub fn csv_row(&self) -> String {
        let f = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        format!("{},{},{},{},{}", self.name, f(self.lower), f(self.upper), self.normalization, self.flags.join(";"))
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.csv_row())
    }
}

/// `π√3/2`, the Gaussian high-resolution constant of optimal scalar quantization.
pub fn sq_nonuniform_const() -> f64 {
    PI * 3f64.sqrt() / 2.0
}

/// `(4/3) ln 2`, the rate-normalized constant of optimal uniform quantization.
pub fn sq_uniform_const() -> f64 {
    4.0 * LN_2 / 3.0
}

/// Matrix-dependent scalar-quantization bounds: a two-sided nonuniform report
/// and a lower-only uniform report.
pub fn sq_bounds_with_matrix(mu1: f64, mu2: f64) -> Result<(BoundReport, BoundReport)> {
    if !(mu1 >= 0.0) || !mu2.is_finite() || mu1 > mu2 {
        return Err(Error::Domain(format!("need 0 <= mu1 <= mu2, got mu1={mu1}, mu2={mu2}")));
    }
    let c = sq_nonuniform_const();
    Ok((
        BoundReport::new("sq_nonuniform", Some(c * mu1), Some(c * mu2), "2^(2R)/K").flag("asymptotic"),
        BoundReport::new("sq_uniform", Some(sq_uniform_const() * mu1), None, "2^(2R)/(KR)").flag("asymptotic"),
    ))
}

/// `[πe/6, πe/3]` for Huffman-coded uniform quantization at expected rate `L̄`.
pub fn enc_bounds() -> BoundReport {
    BoundReport::new("enc", Some(PI * E / 6.0), Some(PI * E / 3.0), "2^(2R)/K").flag("asymptotic")
}

/// Step `√(2πeK/m)·2^{-R}` of the entropy-coded uniform quantizer.
pub fn enc_optimal_step(rate: f64, m: usize, k: usize) -> f64 {
    (2.0 * PI * E * k as f64 / m as f64).sqrt() * (-rate).exp2()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VqBounds {
    /// `1 - δ_K` (scaled by `2^{2Rm/K}/K`) and `1 + δ_K` (scaled by `2^{2R}/m`).
    pub first: BoundReport,
    /// `(π√3/2)·μ₂`, scaled by `2^{2R}/K`.
    pub second: BoundReport,
    /// The first upper bound rescaled to `2^{2R}/K`: `α(1 + δ_K)`, `α = m/K`.
    pub first_upper_per_k: f64,
    /// The first bound is the smaller one iff `δ_K` is below this.
    pub crossover_delta: f64,
    pub first_is_smaller: bool,
}

pub fn vq_bounds(delta_k: f64, m: usize, k: usize, mu2: f64) -> Result<VqBounds> {
    if !(0.0..1.0).contains(&delta_k) {
        return Err(Error::Domain(format!("need 0 <= delta_K < 1, got {delta_k}")));
    }
    if m == 0 || k == 0 {
        return Err(Error::Domain("m and K must be positive".into()));
    }
    let alpha = m as f64 / k as f64;
    let first = BoundReport::new("vq_ub1", Some(1.0 - delta_k), Some(1.0 + delta_k), "lower 2^(2Rm/K)/K; upper 2^(2R)/m")
        .flag("asymptotic");
    let second = BoundReport::new("vq_ub2", None, Some(sq_nonuniform_const() * mu2), "2^(2R)/K").flag("asymptotic");
    let crossover_delta = sq_nonuniform_const() * mu2 / alpha - 1.0;
    Ok(VqBounds {
        first,
        second,
        first_upper_per_k: alpha * (1.0 + delta_k),
        crossover_delta,
        first_is_smaller: delta_k < crossover_delta,
    })
}

/// `4 / (√(3 - 3δ) - √(1 + δ))` with `δ = δ_{4K}`.
pub fn c_bp(delta: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&delta) {
        return Err(Error::Domain(format!("c_bp needs 0 <= delta_4K < 1/2 (sqrt(3-3d) > sqrt(1+d)), got {delta}")));
    }
    Ok(4.0 / ((3.0 - 3.0 * delta).sqrt() - (1.0 + delta).sqrt()))
}

/// `(1 + δ + δ²) / (δ(1 - δ))` with `δ = δ_{3K}`.
pub fn c_sp(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("c_sp needs 0 < delta_3K < 1, got {delta}")));
    }
    Ok((1.0 + delta + delta * delta) / (delta * (1.0 - delta)))
}

/// `√(1 - δ) / (1 + δ)` with `δ = δ_K`.
pub fn c_lb(delta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::Domain(format!("c_lb needs 0 <= delta_K < 1, got {delta}")));
    }
    Ok((1.0 - delta).sqrt() / (1.0 + delta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Optimal nonuniform scalar quantization.
    Sq,
    /// Optimal uniform scalar quantization.
    Usq,
    /// Entropy-coded uniform quantization.
    Enc,
    Vq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Sp,
    Bp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deltas {
    pub k: f64,
    pub three_k: f64,
    pub four_k: f64,
    /// The values came from sampled supports and may underestimate.
    pub sampled: bool,
}

/// `μ₁`, `μ₂` of a specific matrix; absent under the i.i.d. assumptions,
/// where both are 1 in the limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mus {
    pub mu1: f64,
    pub mu2: f64,
}

/// Bounds on the normalized reconstruction distortion: the lower bound
/// `c_lb²` and the upper bound `c_sp²` or `c_bp²`, times the scheme's
/// measurement-distortion constants.
pub fn recon_bound_report(scheme: Scheme, algo: Algo, deltas: Deltas, mus: Option<Mus>, m: usize, k: usize) -> Result<BoundReport> {
    let lb = c_lb(deltas.k)?.powi(2);
    let (c, algo_name) = match algo {
        Algo::Sp => (c_sp(deltas.three_k)?.powi(2), "sp"),
        Algo::Bp => (c_bp(deltas.four_k)?.powi(2), "bp"),
    };
    let (mu1, mu2) = match mus {
        Some(Mus { mu1, mu2 }) => {
            if !(mu1 >= 0.0) || mu1 > mu2 {
                return Err(Error::Domain(format!("need 0 <= mu1 <= mu2, got mu1={mu1}, mu2={mu2}")));
            }
            (mu1, mu2)
        }
        None => (1.0, 1.0),
    };
    let mut report = match scheme {
        Scheme::Sq => {
            let s = sq_nonuniform_const();
            BoundReport::new("recon_sq", Some(lb * s * mu1), Some(c * s * mu2), "2^(2R)/K")
        }
        Scheme::Usq => {
            let s = sq_uniform_const();
            let upper = if mus.is_none() { Some(c * s) } else { None };
            BoundReport::new("recon_usq", Some(lb * s * mu1), upper, "2^(2R)/(KR)").flag("assumptions_i_only")
        }
        Scheme::Enc => BoundReport::new("recon_enc", Some(lb * PI * E / 6.0), Some(c * PI * E / 3.0), "2^(2R)/K"),
        Scheme::Vq => {
            if m == 0 || k == 0 {
                return Err(Error::Domain("m and K must be positive".into()));
            }
            BoundReport::new(
                "recon_vq",
                Some(lb * (1.0 - deltas.k)),
                Some(c * (1.0 + deltas.k)),
                "lower 2^(2Rm/K)/K; upper 2^(2R)/m",
            )
        }
    };
    report.name = format!("{}_{algo_name}", report.name);
    report.flags.push("asymptotic".into());
    if deltas.sampled {
        report.flags.push("sampled_delta_upper_unverified".into());
    }
    Ok(report)
}
