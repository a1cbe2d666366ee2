//! Distributional and high-resolution checks against the closed-form constants.

use std::f64::consts::{E, PI};
use std::fmt::Write as _;

use super::config::{ExperimentConfig, QuantizerKind};
use super::summary::Summary;
use crate::bounds::{enc_bounds, sq_bounds_with_matrix, sq_nonuniform_const, sq_uniform_const};
use crate::normal;
use crate::quant::{
    distortion, entropy, expected_length, gaussian_cell_probs, huffman, lloyd_design, uniform_design, LloydInit, LloydParams,
    ScalarQuantizer, Source,
};
use crate::rng::{self, domain, Gaussian};
use crate::{Error, Result};

/// `sup_t |F_n(t) - F(t)|` of the empirical distribution of `samples`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_unstable_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Draws of `√(m/K)·Y_i` for one measurement coordinate under i.i.d.
/// `N(0, 1/m)` entries and a `K`-sparse standard normal signal.
pub fn clt_samples(m: usize, k: usize, n: usize, n_samples: usize, seed: u64) -> Result<Vec<f64>> {
    if m == 0 || k == 0 || k > n {
        return Err(Error::Config(format!("need m >= 1 and 1 <= K <= N, got m={m} K={k} N={n}")));
    }
    let scale = (m as f64 / k as f64).sqrt() / (m as f64).sqrt();
    Ok((0..n_samples as u64)
        .map(|s| {
            let mut rng = rng::keyed_rng(seed, domain::CLT, s);
            let _support = rng::random_subset(&mut rng, n, k);
            let mut g = Gaussian::new(rng);
            (0..k).map(|_| g.sample() * g.sample()).sum::<f64>() * scale
        })
        .collect())
}

/// Kolmogorov-Smirnov distance of `√(m/K)·Y_i` from the standard normal.
pub fn verify_clt(m: usize, k: usize, n: usize, n_samples: usize, seed: u64) -> Result<f64> {
    Ok(ks_statistic(&clt_samples(m, k, n, n_samples, seed)?, normal::cdf))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Row {
    pub rate: u32,
    pub kind: QuantizerKind,
    /// Distortion for the standard Gaussian, by quadrature.
    pub distortion: f64,
    /// `2^{2R}·D`.
    pub normalized: f64,
    /// `2^{2R}·D/R`.
    pub normalized_per_rate: f64,
    /// The limit the matching column approaches: `π√3/2` for Lloyd against
    /// `normalized`, `(4/3) ln 2` for uniform against `normalized_per_rate`.
    pub constant: f64,
    /// Empirical distortion on `n_samples` Gaussian draws, NaN when none.
    pub monte_carlo: f64,
}

impl Theorem1Row {
    /// The column compared with `constant`.
    pub fn compared(&self) -> f64 {
        match self.kind {
            QuantizerKind::Uniform => self.normalized_per_rate,
            _ => self.normalized,
        }
    }
}

fn monte_carlo(q: &ScalarQuantizer, n_samples: usize, seed: u64, rate: u32) -> f64 {
    if n_samples == 0 {
        return f64::NAN;
    }
    let mut g = Gaussian::new(rng::keyed_rng(seed, domain::GAUSSIAN_SAMPLES, rate as u64));
    let draws: Vec<f64> = (0..n_samples).map(|_| g.sample()).collect();
    distortion(q, Source::Samples(&draws))
}

/// Lloyd and distortion-optimal uniform quantizers for `N(0, 1)` at each rate.
pub fn theorem1_check(rates: &[u32], n_samples: usize, seed: u64) -> Result<Vec<Theorem1Row>> {
    let source = Source::Gaussian { sigma: 1.0 };
    let mut rows = Vec::new();
    for &rate in rates {
        let levels = 1usize << rate;
        let scale = (2.0 * rate as f64).exp2();
        let lloyd = lloyd_design(source, levels, &LloydParams::with_init(LloydInit::Companded))?;
        let uni = uniform_design(source, levels, None)?;
        for (kind, q, d, constant) in [
            (QuantizerKind::Lloyd, &lloyd.quantizer, lloyd.distortion(), sq_nonuniform_const()),
            (QuantizerKind::Uniform, &uni.quantizer, uni.distortion, sq_uniform_const()),
        ] {
            rows.push(Theorem1Row {
                rate,
                kind,
                distortion: d,
                normalized: scale * d,
                normalized_per_rate: scale * d / rate as f64,
                constant,
                monte_carlo: monte_carlo(q, n_samples, seed, rate),
            });
        }
    }
    Ok(rows)
}

pub fn theorem1_csv(rows: &[Theorem1Row]) -> String {
    let mut out = String::from("rate,quantizer,distortion,normalized,normalized_per_rate,constant,monte_carlo\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.rate, r.kind, r.distortion, r.normalized, r.normalized_per_rate, r.constant, r.monte_carlo
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem3Row {
    pub rate: u32,
    pub step: f64,
    pub levels: usize,
    pub entropy: f64,
    /// `L̄ = Σ p_i ℓ_i` of the Huffman code on the cell probabilities.
    pub expected_length: f64,
    pub distortion: f64,
    /// `2^{2L̄}·D`.
    pub normalized: f64,
    pub lower: f64,
    pub upper: f64,
    /// `H ≤ L̄ ≤ H + 1` up to `1e-12`.
    pub bracket_holds: bool,
}

/// Huffman-coded uniform quantization of `N(0, 1)` with step `√(2πe)·2^{-R}`
/// and `M = 2⌈8/Δ⌉` levels.
pub fn theorem3_check(rates: &[u32]) -> Result<Vec<Theorem3Row>> {
    let b = enc_bounds();
    let mut rows = Vec::new();
    for &rate in rates {
        let step = (2.0 * PI * E).sqrt() * (-(rate as f64)).exp2();
        let levels = 2 * (8.0 / step).ceil() as usize;
        let q = ScalarQuantizer::uniform(levels, step)?;
        let p = gaussian_cell_probs(&q, 1.0);
        if p.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Design(format!("a cell has zero probability at rate {rate}")));
        }
        let code = huffman(&p)?;
        let h = entropy(&p)?;
        let l = expected_length(&code, &p)?;
        let d = distortion(&q, Source::Gaussian { sigma: 1.0 });
        rows.push(Theorem3Row {
            rate,
            step,
            levels,
            entropy: h,
            expected_length: l,
            distortion: d,
            normalized: (2.0 * l).exp2() * d,
            lower: b.lower.unwrap(),
            upper: b.upper.unwrap(),
            bracket_holds: h <= l + 1e-12 && l <= h + 1.0 + 1e-12,
        });
    }
    Ok(rows)
}

pub fn theorem3_csv(rows: &[Theorem3Row]) -> String {
    let mut out = String::from("rate,step,levels,entropy,expected_length,distortion,normalized,lower,upper,bracket_holds\n");
    for r in rows {
        writeln!(
            out,
            "{},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.rate, r.step, r.levels, r.entropy, r.expected_length, r.distortion, r.normalized, r.lower, r.upper, r.bracket_holds
        )
        .unwrap();
    }
    out
}

/// Measured measurement distortion `2^{2R}·m·D/K` beside the asymptotic
/// constants (i.i.d. limit, `μ₁ = μ₂ = 1`). Report only.
pub fn bound_overlay_csv(cfg: &ExperimentConfig, summaries: &[Summary]) -> String {
    let mut out = String::from("rate,quantizer,normalized_measurement_distortion,lower,upper,normalization,flags\n");
    let (sq, usq) = sq_bounds_with_matrix(1.0, 1.0).expect("unit mus are valid");
    let enc = enc_bounds();
    let f = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.16e}"));
    let mut seen = Vec::new();
    for s in summaries {
        if seen.contains(&(s.rate, s.quantizer)) {
            continue;
        }
        seen.push((s.rate, s.quantizer));
        let base = (2.0 * s.rate as f64).exp2() * cfg.m as f64 * s.mean_measurement_mse / cfg.k as f64;
        let (value, report) = match s.quantizer {
            QuantizerKind::Lloyd => (base, &sq),
            QuantizerKind::Uniform => (base / s.rate as f64, &usq),
            QuantizerKind::Entropy => (base, &enc),
        };
        writeln!(
            out,
            "{},{},{:.16e},{},{},{},{}",
            s.rate,
            s.quantizer,
            value,
            f(report.lower),
            f(report.upper),
            report.normalization,
            report.flags.join(";")
        )
        .unwrap();
    }
    out
}
