//! Lloyd-Max scalar quantizer design.

use rand::Rng;

use super::scalar::{distortion, ScalarQuantizer};
use super::Source;
use crate::normal;
use crate::rng::{self, domain, Gaussian};
use crate::{Error, Result};

/// Initial codebook for [`lloyd_design`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LloydInit {
    /// Levels at the source's `i/(M+1)` quantiles, `i = 1..=M`.
    UniformSpread,
    /// Levels at the `i/(M+1)` quantiles of a Gaussian with the source's mean
    /// and `√3` times its standard deviation. This is the high-resolution
    /// optimal point density `f^{1/3}` for a Gaussian source and keeps the
    /// number of iterations small at large `M`.
    Companded,
    /// D²-weighted seeding on the samples (or on draws from the Gaussian source).
    KMeansPlusPlusLike { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LloydParams {
    pub init: LloydInit,
    /// Stop when the relative distortion decrease of one iteration falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LloydParams {
    fn default() -> Self {
        Self { init: LloydInit::UniformSpread, tol: 1e-10, max_iter: 500 }
    }
}

impl LloydParams {
    pub fn with_init(init: LloydInit) -> Self {
        Self { init, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct LloydDesign {
    pub quantizer: ScalarQuantizer,
    /// Distortion of the nearest-level quantizer after each update, starting
    /// with the initial codebook. Non-increasing.
    pub distortion_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl LloydDesign {
    pub fn distortion(&self) -> f64 {
        *self.distortion_history.last().expect("history is never empty")
    }
}

pub fn lloyd_design(source: Source<'_>, m: usize, params: &LloydParams) -> Result<LloydDesign> {
    if m == 0 {
        return Err(Error::Design("Lloyd design needs at least one level".into()));
    }
    match source {
        Source::Samples(samples) => lloyd_samples(samples, m, params),
        Source::Gaussian { sigma } => {
            if !(sigma > 0.0) || !sigma.is_finite() {
                return Err(Error::Design(format!("Gaussian source needs sigma > 0, got {sigma}")));
            }
            lloyd_gaussian(sigma, m, params)
        }
    }
}

fn lloyd_gaussian(sigma: f64, m: usize, params: &LloydParams) -> Result<LloydDesign> {
    let mut levels = match params.init {
        LloydInit::UniformSpread => gaussian_quantiles(m, sigma),
        LloydInit::Companded => gaussian_quantiles(m, sigma * 3f64.sqrt()),
        LloydInit::KMeansPlusPlusLike { seed } => {
            let mut g = Gaussian::new(rng::keyed_rng(seed, domain::INIT, 0));
            let draws: Vec<f64> = (0..(200 * m).max(1000)).map(|_| sigma * g.sample()).collect();
            let mut sorted = draws;
            sorted.sort_unstable_by(f64::total_cmp);
            kmeanspp_seed(&sorted, m, seed)?
        }
    };
    let eval = |lv: &[f64]| -> Result<f64> {
        Ok(distortion(&ScalarQuantizer::from_levels(lv.to_vec())?, Source::Gaussian { sigma }))
    };
    let mut history = vec![eval(&levels)?];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iter {
        let q = ScalarQuantizer::from_levels(levels.clone())?;
        let next: Vec<f64> = (0..m)
            .map(|i| {
                let (a, b) = q.cell(i);
                let (za, zb) = (a / sigma, b / sigma);
                let p = normal::interval_prob(za, zb);
                if p > 0.0 {
                    sigma * (normal::pdf(za) - normal::pdf(zb)) / p
                } else {
                    levels[i]
                }
            })
            .collect();
        let Ok(d) = eval(&next) else {
            // centroids collapsed below floating-point resolution
            converged = true;
            break;
        };
        let prev = *history.last().unwrap();
        if d > prev {
            converged = true;
            break;
        }
        levels = next;
        history.push(d);
        iterations += 1;
        if prev - d <= params.tol * prev {
            converged = true;
            break;
        }
    }
    Ok(LloydDesign { quantizer: ScalarQuantizer::from_levels(levels)?, distortion_history: history, iterations, converged })
}

fn gaussian_quantiles(m: usize, sigma: f64) -> Vec<f64> {
    (1..=m).map(|i| sigma * normal::quantile(i as f64 / (m as f64 + 1.0))).collect()
}

fn lloyd_samples(samples: &[f64], m: usize, params: &LloydParams) -> Result<LloydDesign> {
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Design("non-finite sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() < m {
        return Err(Error::Design(format!("{} distinct samples cannot support {m} levels", distinct.len())));
    }
    let mut levels = match params.init {
        LloydInit::UniformSpread => sample_quantiles(&sorted, &distinct, m),
        LloydInit::Companded => {
            let n = sorted.len() as f64;
            let mean = sorted.iter().sum::<f64>() / n;
            let sd = (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            let mut lv: Vec<f64> = gaussian_quantiles(m, sd * 3f64.sqrt()).into_iter().map(|v| v + mean).collect();
            lv.dedup();
            if lv.len() < m || sd == 0.0 {
                sample_quantiles(&sorted, &distinct, m)
            } else {
                lv
            }
        }
        LloydInit::KMeansPlusPlusLike { seed } => kmeanspp_seed(&sorted, m, seed)?,
    };

    let n = sorted.len() as f64;
    let mut history: Vec<f64> = Vec::new();
    let mut previous: Option<Vec<f64>> = None;
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let cells = partition_with_repair(&sorted, &mut levels)?;
        let d = cells
            .iter()
            .zip(&levels)
            .map(|(&(lo, hi), &w)| sorted[lo..hi].iter().map(|v| (v - w) * (v - w)).sum::<f64>())
            .sum::<f64>()
            / n;
        if let (Some(&prev), Some(prev_levels)) = (history.last(), previous.take()) {
            if d > prev {
                // rounding noise at the fixed point
                levels = prev_levels;
                converged = true;
                break;
            }
            history.push(d);
            if prev - d <= params.tol * prev {
                converged = true;
                break;
            }
        } else {
            history.push(d);
            if d == 0.0 {
                converged = true;
                break;
            }
        }
        if iterations == params.max_iter {
            break;
        }
        let next = cells
            .iter()
            .map(|&(lo, hi)| sorted[lo..hi].iter().sum::<f64>() / (hi - lo) as f64)
            .collect();
        previous = Some(std::mem::replace(&mut levels, next));
        iterations += 1;
    }
    Ok(LloydDesign { quantizer: ScalarQuantizer::from_levels(levels)?, distortion_history: history, iterations, converged })
}

fn sample_quantiles(sorted: &[f64], distinct: &[f64], m: usize) -> Vec<f64> {
    let n = sorted.len();
    let mut lv: Vec<f64> = (1..=m).map(|i| sorted[(i * n / (m + 1)).min(n - 1)]).collect();
    lv.dedup();
    if lv.len() == m {
        return lv;
    }
    if m == 1 {
        return vec![distinct[distinct.len() / 2]];
    }
    let u = distinct.len();
    (0..m).map(|i| distinct[i * (u - 1) / (m - 1)]).collect()
}

/// Cell index ranges of the sorted samples under the midpoint thresholds of
/// `levels`. An empty cell's level moves to the midpoint of the most populous
/// splittable cell's extreme samples (or halfway from its lower extreme to
/// that midpoint when a level already sits there); at most `M + 1` rounds.
fn partition_with_repair(sorted: &[f64], levels: &mut [f64]) -> Result<Vec<(usize, usize)>> {
    let m = levels.len();
    for _ in 0..=m {
        let q = ScalarQuantizer::from_levels(levels.to_vec())?;
        let mut cells = Vec::with_capacity(m);
        let mut lo = 0;
        for i in 0..m {
            let hi = if i + 1 == m { sorted.len() } else { lo + sorted[lo..].partition_point(|&v| v <= q.thresholds()[i]) };
            cells.push((lo, hi));
            lo = hi;
        }
        let Some(empty) = cells.iter().position(|&(lo, hi)| lo == hi) else {
            return Ok(cells);
        };
        let Some(&(big_lo, big_hi)) = cells
            .iter()
            .filter(|&&(lo, hi)| hi > lo && sorted[lo] < sorted[hi - 1])
            .max_by_key(|&&(lo, hi)| (hi - lo, usize::MAX - lo))
        else {
            break;
        };
        let (lo_v, hi_v) = (sorted[big_lo], sorted[big_hi - 1]);
        let mut mid = 0.5 * (lo_v + hi_v);
        if levels.contains(&mid) {
            // the cell's level already sits there; split towards the lower extreme
            mid = 0.5 * (lo_v + mid);
        }
        if levels.contains(&mid) || mid <= lo_v {
            break;
        }
        levels[empty] = mid;
        levels.sort_unstable_by(f64::total_cmp);
    }
    Err(Error::Design("empty quantization cell could not be repaired".into()))
}

/// D² seeding over sorted samples; returns `m` distinct sorted levels.
fn kmeanspp_seed(sorted: &[f64], m: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = rng::keyed_rng(seed, domain::INIT, 1);
    let n = sorted.len();
    let mut centres = vec![sorted[rng.random_range(0..n)]];
    let mut d2: Vec<f64> = sorted.iter().map(|v| (v - centres[0]).powi(2)).collect();
    while centres.len() < m {
        let total: f64 = d2.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Design("seeding ran out of distinct samples".into()));
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, &w) in d2.iter().enumerate() {
            if target < w {
                pick = i;
                break;
            }
            target -= w;
        }
        if d2[pick] == 0.0 {
            continue;
        }
        let c = sorted[pick];
        centres.push(c);
        for (w, v) in d2.iter_mut().zip(sorted) {
            *w = w.min((v - c).powi(2));
        }
    }
    centres.sort_unstable_by(f64::total_cmp);
    Ok(centres)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quant::integrate;
    use std::f64::consts::PI;

    #[test]
    fn single_level_is_the_mean() {
        let s = [1.0, 2.0, 4.0, 5.0];
        let d = lloyd_design(Source::Samples(&s), 1, &LloydParams::default()).unwrap();
        assert_eq!(d.quantizer.levels(), &[3.0]);
        assert!((d.distortion() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn separable_clusters() {
        let s = [-1.0, -1.0, 1.0, 1.0];
        let d = lloyd_design(Source::Samples(&s), 2, &LloydParams::default()).unwrap();
        assert_eq!(d.quantizer.levels(), &[-1.0, 1.0]);
        assert_eq!(d.distortion(), 0.0);
    }

    #[test]
    fn two_level_gaussian_fixed_point() {
        // Oracle: centroid of the half-normal by quadrature, E[Z | Z > 0].
        let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
        let mass = integrate::integrate_to_infinity(&phi, 0.0, 1.0, 1e-14, 0.0);
        let first = integrate::integrate_to_infinity(&|z: f64| z * phi(z), 0.0, 1.0, 1e-14, 0.0);
        let centroid = first / mass;
        assert!((centroid - (2.0 / PI).sqrt()).abs() < 1e-12);
        for init in [LloydInit::UniformSpread, LloydInit::Companded, LloydInit::KMeansPlusPlusLike { seed: 4 }] {
            // an asymmetric start approaches the fixed point linearly, so the
            // distortion test needs to be near machine precision
            let params = LloydParams { init, tol: 1e-15, max_iter: 2000 };
            let d = lloyd_design(Source::Gaussian { sigma: 1.0 }, 2, &params).unwrap();
            let lv = d.quantizer.levels();
            assert!((lv[1] - centroid).abs() < 1e-6 && (lv[0] + centroid).abs() < 1e-6, "{lv:?}");
            assert!((d.distortion() - (1.0 - 2.0 / PI)).abs() < 1e-6);
        }
    }

    #[test]
    fn history_is_non_increasing() {
        let mut g = Gaussian::new(rng::keyed_rng(3, domain::GAUSSIAN_SAMPLES, 0));
        let s: Vec<f64> = (0..5000).map(|_| g.sample().powi(3)).collect();
        for m in [3, 8, 16] {
            for init in [LloydInit::UniformSpread, LloydInit::Companded, LloydInit::KMeansPlusPlusLike { seed: 1 }] {
                let d = lloyd_design(Source::Samples(&s), m, &LloydParams::with_init(init)).unwrap();
                assert!(d.distortion_history.windows(2).all(|w| w[1] <= w[0]));
                let check = distortion(&d.quantizer, Source::Samples(&s));
                assert!((check - d.distortion()).abs() <= 1e-12 * check.max(1e-300));
            }
        }
    }

    #[test]
    fn too_few_distinct_samples() {
        let s = [1.0, 1.0, 2.0];
        assert!(matches!(lloyd_design(Source::Samples(&s), 3, &LloydParams::default()), Err(Error::Design(_))));
        assert!(lloyd_design(Source::Gaussian { sigma: 0.0 }, 2, &LloydParams::default()).is_err());
    }

    #[test]
    fn empty_cells_are_repaired() {
        // the companded init puts most levels far outside this tight sample cloud
        let mut s: Vec<f64> = (0..200).map(|i| i as f64 * 1e-3).collect();
        s.push(100.0);
        let d = lloyd_design(Source::Samples(&s), 6, &LloydParams::with_init(LloydInit::Companded)).unwrap();
        assert_eq!(d.quantizer.len(), 6);
        assert!(d.distortion_history.windows(2).all(|w| w[1] <= w[0]));
    }
}
