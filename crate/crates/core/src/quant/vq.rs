//! Generalized Lloyd (LBG) vector quantizer design.

use rand::Rng;

use crate::rng::{self, domain};
use crate::{Error, Result};

/// `M` codewords in `R^k`, stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorQuantizer {
    dim: usize,
    codebook: Vec<f64>,
}

impl VectorQuantizer {
    pub fn new(codebook: Vec<Vec<f64>>) -> Result<Self> {
        let dim = codebook.first().map_or(0, Vec::len);
        if dim == 0 || codebook.iter().any(|c| c.len() != dim) {
            return Err(Error::InvalidQuantizer("codewords must share a positive dimension".into()));
        }
        if codebook.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidQuantizer("non-finite codeword".into()));
        }
        for i in 0..codebook.len() {
            if codebook[..i].contains(&codebook[i]) {
                return Err(Error::InvalidQuantizer(format!("codeword {i} is repeated")));
            }
        }
        Ok(Self { dim, codebook: codebook.concat() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.codebook.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.codebook.is_empty()
    }

    pub fn codeword(&self, i: usize) -> &[f64] {
        &self.codebook[i * self.dim..(i + 1) * self.dim]
    }

    /// Index of the nearest codeword and the squared distance to it; the
    /// lowest index wins ties.
    pub fn nearest(&self, y: &[f64]) -> (usize, f64) {
        nearest(&self.codebook, self.dim, y)
    }

    pub fn apply<'a>(&'a self, y: &[f64]) -> (&'a [f64], usize) {
        let i = self.nearest(y).0;
        (self.codeword(i), i)
    }

    /// Mean squared error per dimension over `samples`.
    pub fn distortion(&self, samples: &[Vec<f64>]) -> f64 {
        if samples.is_empty() {
            return 0.0;
        }
        samples.iter().map(|y| self.nearest(y).1).sum::<f64>() / (samples.len() * self.dim) as f64
    }
}

fn nearest(codebook: &[f64], dim: usize, y: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in codebook.chunks_exact(dim).enumerate() {
        let d: f64 = c.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbgParams {
    /// Seeds the k-means++ initialization.
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    /// Start from this codebook instead of seeding.
    pub initial: Option<Vec<Vec<f64>>>,
}

impl Default for LbgParams {
    fn default() -> Self {
        Self { seed: 0, tol: 1e-10, max_iter: 500, initial: None }
    }
}

#[derive(Debug, Clone)]
pub struct LbgDesign {
    pub quantizer: VectorQuantizer,
    /// Per-dimension distortion of each partition, initial codebook first.
    pub distortion_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl LbgDesign {
    pub fn distortion(&self) -> f64 {
        *self.distortion_history.last().expect("history is never empty")
    }
}

pub fn lbg_design(samples: &[Vec<f64>], m: usize, params: &LbgParams) -> Result<LbgDesign> {
    let dim = samples.first().map_or(0, Vec::len);
    if m == 0 || dim == 0 || samples.iter().any(|s| s.len() != dim) {
        return Err(Error::Design("LBG needs M >= 1 and samples of one positive dimension".into()));
    }
    if samples.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Design("non-finite sample".into()));
    }
    let mut distinct: Vec<&Vec<f64>> = samples.iter().collect();
    distinct.sort_unstable_by(|a, b| lex_cmp(a, b));
    distinct.dedup();
    if distinct.len() < m {
        return Err(Error::Design(format!("{} distinct samples cannot support {m} codewords", distinct.len())));
    }

    let mut codebook = match &params.initial {
        Some(init) => {
            if init.len() != m {
                return Err(Error::DimensionMismatch { expected: m, actual: init.len() });
            }
            VectorQuantizer::new(init.clone())?.codebook
        }
        None => kmeanspp(samples, dim, m, params.seed),
    };
    let scale = (samples.len() * dim) as f64;
    let mut history: Vec<f64> = Vec::new();
    let mut previous: Option<Vec<f64>> = None;
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let (assign, total) = partition_with_repair(samples, dim, &mut codebook)?;
        let d = total / scale;
        if let (Some(&prev), Some(prev_book)) = (history.last(), previous.take()) {
            if d > prev {
                codebook = prev_book;
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
        let mut next = vec![0.0; m * dim];
        let mut counts = vec![0usize; m];
        for (s, &a) in samples.iter().zip(&assign) {
            counts[a] += 1;
            for (acc, v) in next[a * dim..(a + 1) * dim].iter_mut().zip(s) {
                *acc += v;
            }
        }
        for (c, &n) in next.chunks_exact_mut(dim).zip(&counts) {
            c.iter_mut().for_each(|v| *v /= n as f64);
        }
        previous = Some(std::mem::replace(&mut codebook, next));
        iterations += 1;
    }
    let quantizer = VectorQuantizer::new(codebook.chunks_exact(dim).map(<[f64]>::to_vec).collect())?;
    Ok(LbgDesign { quantizer, distortion_history: history, iterations, converged })
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
}

/// Nearest-codeword assignment with every cell nonempty. An empty codeword is
/// moved next to the centroid of the cell with the largest total distortion,
/// which can only lower the distortion of the partition.
fn partition_with_repair(samples: &[Vec<f64>], dim: usize, codebook: &mut [f64]) -> Result<(Vec<usize>, f64)> {
    let m = codebook.len() / dim;
    for _ in 0..=m {
        let mut assign = Vec::with_capacity(samples.len());
        let mut counts = vec![0usize; m];
        let mut cell_err = vec![0.0; m];
        let mut total = 0.0;
        for s in samples {
            let (i, d) = nearest(codebook, dim, s);
            assign.push(i);
            counts[i] += 1;
            cell_err[i] += d;
            total += d;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return Ok((assign, total));
        };
        let worst = (0..m).max_by(|&a, &b| cell_err[a].total_cmp(&cell_err[b]).then(b.cmp(&a))).unwrap();
        if cell_err[worst] == 0.0 {
            break;
        }
        let mut centroid = vec![0.0; dim];
        for (s, _) in samples.iter().zip(&assign).filter(|(_, &a)| a == worst) {
            centroid.iter_mut().zip(s).for_each(|(c, v)| *c += v / counts[worst] as f64);
        }
        let spread = (cell_err[worst] / (counts[worst] * dim) as f64).sqrt();
        let target = &mut codebook[empty * dim..(empty + 1) * dim];
        for (j, (t, c)) in target.iter_mut().zip(&centroid).enumerate() {
            *t = c + 1e-3 * spread * if j % 2 == 0 { 1.0 } else { -1.0 };
        }
    }
    Err(Error::Design("empty cell could not be repaired".into()))
}

fn kmeanspp(samples: &[Vec<f64>], dim: usize, m: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng::keyed_rng(seed, domain::INIT, 2);
    let n = samples.len();
    let mut book = samples[rng.random_range(0..n)].clone();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let mut d2: Vec<f64> = samples.iter().map(|s| dist(s, &book)).collect();
    while book.len() < m * dim {
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = None;
        for (i, &w) in d2.iter().enumerate() {
            if w > 0.0 && target < w {
                pick = Some(i);
                break;
            }
            target -= w;
        }
        // rounding can run off the end; take the last sample not yet chosen
        let pick = pick.or_else(|| d2.iter().rposition(|&w| w > 0.0)).expect("enough distinct samples");
        let c = samples[pick].clone();
        for (w, s) in d2.iter_mut().zip(samples) {
            *w = w.min(dist(s, &c));
        }
        book.extend(c);
    }
    book
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quant::{lloyd_design, LloydInit, LloydParams, Source};
    use crate::rng::Gaussian;

    fn gaussian_points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut g = Gaussian::new(rng::keyed_rng(seed, domain::GAUSSIAN_SAMPLES, 0));
        (0..n).map(|_| (0..dim).map(|_| g.sample()).collect()).collect()
    }

    #[test]
    fn single_codeword_is_the_mean() {
        let s = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 4.0], vec![2.0, 4.0]];
        let d = lbg_design(&s, 1, &LbgParams::default()).unwrap();
        assert_eq!(d.quantizer.codeword(0), &[1.0, 2.0]);
        // trace of the covariance (1 + 4) over two dimensions
        assert!((d.distortion() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn planted_clusters() {
        let centres = [[-10.0, -10.0], [-10.0, 10.0], [10.0, -10.0], [10.0, 10.0]];
        let noise = gaussian_points(400, 2, 5);
        let s: Vec<Vec<f64>> =
            noise.iter().enumerate().map(|(i, e)| vec![centres[i % 4][0] + 0.1 * e[0], centres[i % 4][1] + 0.1 * e[1]]).collect();
        let d = lbg_design(&s, 4, &LbgParams { seed: 9, ..LbgParams::default() }).unwrap();
        let mut within = 0.0;
        for c in centres {
            let members: Vec<&Vec<f64>> = s.iter().filter(|p| (p[0] - c[0]).abs() < 5.0 && (p[1] - c[1]).abs() < 5.0).collect();
            let mean: Vec<f64> = (0..2).map(|j| members.iter().map(|p| p[j]).sum::<f64>() / members.len() as f64).collect();
            within += members.iter().map(|p| (p[0] - mean[0]).powi(2) + (p[1] - mean[1]).powi(2)).sum::<f64>();
            let (w, _) = d.quantizer.apply(&mean);
            assert!((w[0] - mean[0]).abs() < 1e-12 && (w[1] - mean[1]).abs() < 1e-12);
        }
        assert!((d.distortion() - within / 800.0).abs() < 1e-12);
    }

    #[test]
    fn one_dimension_matches_scalar_lloyd() {
        let pts = gaussian_points(3000, 1, 8);
        let flat: Vec<f64> = pts.iter().map(|p| p[0]).collect();
        let mut sorted = flat.clone();
        sorted.sort_unstable_by(f64::total_cmp);
        let m = 5;
        let init: Vec<Vec<f64>> = (1..=m).map(|i| vec![sorted[i * sorted.len() / (m + 1)]]).collect();
        let vq = lbg_design(&pts, m, &LbgParams { initial: Some(init), ..LbgParams::default() }).unwrap();
        let sq = lloyd_design(Source::Samples(&flat), m, &LloydParams::with_init(LloydInit::UniformSpread)).unwrap();
        for i in 0..m {
            assert!((vq.quantizer.codeword(i)[0] - sq.quantizer.levels()[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn history_is_non_increasing_with_repairs() {
        let s = gaussian_points(500, 3, 2);
        for m in [2, 7, 16] {
            let d = lbg_design(&s, m, &LbgParams { seed: m as u64, ..LbgParams::default() }).unwrap();
            assert!(d.distortion_history.windows(2).all(|w| w[1] <= w[0]));
        }
        // codewords far from the data start empty and must be pulled in
        let far: Vec<Vec<f64>> = (0..4).map(|i| vec![1e3 + i as f64; 3]).collect();
        let d = lbg_design(&s, 4, &LbgParams { initial: Some(far), ..LbgParams::default() }).unwrap();
        assert!(d.distortion_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(d.distortion() < 1.0);
    }

    #[test]
    fn too_few_distinct_samples() {
        let s = vec![vec![1.0], vec![1.0], vec![2.0]];
        assert!(lbg_design(&s, 3, &LbgParams::default()).is_err());
        assert!(lbg_design(&s, 2, &LbgParams::default()).is_ok());
    }
}
