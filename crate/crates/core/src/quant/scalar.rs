use nalgebra::DVector;

use super::integrate::{integrate, integrate_to_infinity};
use super::Source;
use crate::normal;
use crate::{Error, Result};

/// A scalar quantizer on the whole real line.
///
/// Level `i` (0-based) owns the closed cell `[t_{i-1}, t_i]` with
/// `t_{-1} = -∞` and `t_{M-1} = +∞`; only the `M - 1` finite thresholds are
/// stored. A value sitting exactly on a threshold maps to the lower level.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarQuantizer {
    levels: Vec<f64>,
    thresholds: Vec<f64>,
}

impl ScalarQuantizer {
    pub fn new(levels: Vec<f64>, thresholds: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidQuantizer("no levels".into()));
        }
        if thresholds.len() + 1 != levels.len() {
            return Err(Error::InvalidQuantizer(format!(
                "{} levels need {} thresholds, got {}",
                levels.len(),
                levels.len() - 1,
                thresholds.len()
            )));
        }
        if levels.iter().chain(&thresholds).any(|v| !v.is_finite()) {
            return Err(Error::InvalidQuantizer("non-finite level or threshold".into()));
        }
        if !levels.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidQuantizer("levels must be strictly increasing".into()));
        }
        if !thresholds.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidQuantizer("thresholds must be strictly increasing".into()));
        }
        for (i, &t) in thresholds.iter().enumerate() {
            if !(levels[i] <= t && t <= levels[i + 1]) {
                return Err(Error::InvalidQuantizer(format!("level outside its cell near threshold {i}")));
            }
        }
        Ok(Self { levels, thresholds })
    }

    /// Minimum-distance quantizer: thresholds at the midpoints of adjacent levels.
    pub fn from_levels(levels: Vec<f64>) -> Result<Self> {
        let thresholds = levels.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Self::new(levels, thresholds)
    }

    /// `m` equally spaced levels `(i - (m+1)/2)·step`, symmetric about zero.
    pub fn uniform(m: usize, step: f64) -> Result<Self> {
        if m == 0 || !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidQuantizer(format!("uniform quantizer with {m} levels, step {step}")));
        }
        let centre = (m as f64 + 1.0) / 2.0;
        let levels = (1..=m).map(|i| (i as f64 - centre) * step).collect();
        Self::from_levels(levels)
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Rate in bits, `log2(M)`.
    pub fn rate(&self) -> f64 {
        (self.len() as f64).log2()
    }

    pub fn index(&self, y: f64) -> usize {
        self.thresholds.partition_point(|&t| t < y)
    }

    /// `(level, index)` of the cell containing `y`.
    pub fn apply(&self, y: f64) -> (f64, usize) {
        let i = self.index(y);
        (self.levels[i], i)
    }

    /// Cell bounds of level `i`, infinite at the ends.
    pub fn cell(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 { f64::NEG_INFINITY } else { self.thresholds[i - 1] };
        let hi = if i + 1 == self.len() { f64::INFINITY } else { self.thresholds[i] };
        (lo, hi)
    }

    pub fn quantize(&self, y: &DVector<f64>) -> QuantizedVector {
        let (values, indices) = y.iter().map(|&v| self.apply(v)).unzip::<_, _, Vec<f64>, Vec<usize>>();
        QuantizedVector { values: DVector::from_vec(values), indices }
    }
}

/// Quantized measurements: the reproduction levels and their cell indices.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedVector {
    pub values: DVector<f64>,
    pub indices: Vec<usize>,
}

/// A product of closed intervals, possibly unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), actual: upper.len() });
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() || l > u || *l == f64::INFINITY || *u == f64::NEG_INFINITY {
                return Err(Error::InvalidQuantizer(format!("empty interval [{l}, {u}] at coordinate {i}")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The single point `y`.
    pub fn singleton(y: &DVector<f64>) -> Self {
        Self { lower: y.iter().copied().collect(), upper: y.iter().copied().collect() }
    }

    /// All of `R^m`.
    pub fn unbounded(m: usize) -> Self {
        Self { lower: vec![f64::NEG_INFINITY; m], upper: vec![f64::INFINITY; m] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn clip(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut out = y.clone();
        self.clip_in_place(&mut out);
        out
    }

    pub fn clip_in_place(&self, y: &mut DVector<f64>) {
        for ((v, &l), &u) in y.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(l, u);
        }
    }

    pub fn contains(&self, y: &DVector<f64>, tol: f64) -> bool {
        y.len() == self.dim()
            && y.iter().zip(&self.lower).zip(&self.upper).all(|((v, l), u)| *v >= l - tol && *v <= u + tol)
    }

    /// Largest coordinate violation, each scaled by the cell width (or by one
    /// for unbounded and degenerate cells).
    pub fn scaled_violation(&self, y: &DVector<f64>) -> f64 {
        let mut worst = 0.0f64;
        for (i, v) in y.iter().enumerate() {
            let over = (self.lower[i] - v).max(v - self.upper[i]).max(0.0);
            let w = self.width(i);
            let scale = if w.is_finite() && w > 0.0 { w } else { 1.0 };
            worst = worst.max(over / scale);
        }
        worst
    }

    /// Euclidean distance from `y` to the box.
    pub fn distance(&self, y: &DVector<f64>) -> f64 {
        (y - self.clip(y)).norm()
    }
}

/// The preimage cell of a vector of quantization indices.
pub fn box_region(q: &ScalarQuantizer, indices: &[usize]) -> Result<BoxRegion> {
    let mut lower = Vec::with_capacity(indices.len());
    let mut upper = Vec::with_capacity(indices.len());
    for &i in indices {
        if i >= q.len() {
            return Err(Error::InvalidQuantizer(format!("index {i} out of range for {} levels", q.len())));
        }
        let (l, u) = q.cell(i);
        lower.push(l);
        upper.push(u);
    }
    Ok(BoxRegion { lower, upper })
}

const CELL_REL_TOL: f64 = 1e-13;

/// `σ² ∫_{a}^{b} (z - c)² φ(z) dz` over a standardized cell.
pub(crate) fn gaussian_cell_distortion(a: f64, b: f64, level: f64, sigma: f64) -> f64 {
    let c = level / sigma;
    let (za, zb) = (a / sigma, b / sigma);
    let f = |z: f64| {
        let d = z - c;
        d * d * normal::pdf(z)
    };
    let raw = match (za.is_finite(), zb.is_finite()) {
        (true, true) => integrate(&f, za, zb, CELL_REL_TOL, 0.0),
        (true, false) => integrate_to_infinity(&f, za, 1.0, CELL_REL_TOL, 0.0),
        (false, true) => integrate_to_infinity(&|z: f64| f(-z), -zb, 1.0, CELL_REL_TOL, 0.0),
        (false, false) => {
            integrate_to_infinity(&f, 0.0, 1.0, CELL_REL_TOL, 0.0)
                + integrate_to_infinity(&|z: f64| f(-z), 0.0, 1.0, CELL_REL_TOL, 0.0)
        }
    };
    sigma * sigma * raw
}

/// Mean squared quantization error of `q` under `source`.
pub fn distortion(q: &ScalarQuantizer, source: Source<'_>) -> f64 {
    match source {
        Source::Samples(samples) => {
            if samples.is_empty() {
                return 0.0;
            }
            samples
                .iter()
                .map(|&y| {
                    let e = y - q.apply(y).0;
                    e * e
                })
                .sum::<f64>()
                / samples.len() as f64
        }
        Source::Gaussian { sigma } => (0..q.len())
            .map(|i| {
                let (a, b) = q.cell(i);
                gaussian_cell_distortion(a, b, q.levels[i], sigma)
            })
            .sum(),
    }
}

/// Cell probabilities `P(q(Y) = ω_i)` for `Y ~ N(0, σ²)`.
pub fn gaussian_cell_probs(q: &ScalarQuantizer, sigma: f64) -> Vec<f64> {
    (0..q.len())
        .map(|i| {
            let (a, b) = q.cell(i);
            normal::interval_prob(a / sigma, b / sigma)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(levels: &[f64]) -> ScalarQuantizer {
        ScalarQuantizer::from_levels(levels.to_vec()).unwrap()
    }

    #[test]
    fn boundary_ties_go_to_lower_level() {
        assert_eq!(q(&[-1.0, 1.0]).apply(0.0), (-1.0, 0));
    }

    #[test]
    fn levels_are_fixed_points() {
        let quant = q(&[-3.0, -0.5, 0.25, 4.0]);
        for (i, &l) in quant.levels().iter().enumerate() {
            assert_eq!(quant.apply(l), (l, i));
        }
    }

    #[test]
    fn midpoint_thresholds() {
        let quant = q(&[-2.0, 0.0, 2.0]);
        assert_eq!(quant.thresholds(), &[-1.0, 1.0]);
        assert_eq!(quant.apply(0.9).0, 0.0);
        assert_eq!(quant.apply(1.1).0, 2.0);
    }

    #[test]
    fn invalid_quantizers_are_rejected() {
        assert!(ScalarQuantizer::from_levels(vec![]).is_err());
        assert!(ScalarQuantizer::from_levels(vec![1.0, 1.0]).is_err());
        assert!(ScalarQuantizer::new(vec![0.0, 1.0], vec![2.0]).is_err());
        assert!(ScalarQuantizer::new(vec![0.0, 1.0], vec![]).is_err());
        assert!(ScalarQuantizer::uniform(4, 0.0).is_err());
    }

    #[test]
    fn uniform_levels_are_symmetric() {
        let u = ScalarQuantizer::uniform(4, 0.5).unwrap();
        assert_eq!(u.levels(), &[-0.75, -0.25, 0.25, 0.75]);
        let odd = ScalarQuantizer::uniform(3, 1.0).unwrap();
        assert_eq!(odd.levels(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn box_region_examples() {
        let single = q(&[0.3]);
        let b = box_region(&single, &[0, 0]).unwrap();
        assert_eq!(b, BoxRegion::unbounded(2));
        let three = q(&[-2.0, 0.0, 2.0]);
        let b = box_region(&three, &[1, 0, 2]).unwrap();
        assert_eq!(b.lower(), &[-1.0, f64::NEG_INFINITY, 1.0]);
        assert_eq!(b.upper(), &[1.0, -1.0, f64::INFINITY]);
        assert!(box_region(&three, &[3]).is_err());
    }

    #[test]
    fn quantized_value_lies_in_its_box() {
        let quant = q(&[-1.3, -0.2, 0.4, 2.0]);
        let y = DVector::from_vec(vec![-5.0, -0.75, -0.2, 0.1, 1.2, 9.0]);
        let qv = quant.quantize(&y);
        let b = box_region(&quant, &qv.indices).unwrap();
        assert!(b.contains(&y, 0.0));
        assert!(b.contains(&qv.values, 0.0));
    }

    #[test]
    fn distortion_examples() {
        let quant = q(&[-1.0, 0.5, 2.0]);
        assert_eq!(distortion(&quant, Source::Samples(&[-1.0, 2.0, 0.5, 0.5])), 0.0);
        let zero = q(&[0.0]);
        for sigma in [0.5, 1.0, 3.0] {
            let d = distortion(&zero, Source::Gaussian { sigma });
            assert!((d - sigma * sigma).abs() < 1e-12 * sigma * sigma);
        }
        let c = (2.0 / std::f64::consts::PI).sqrt();
        let d = distortion(&q(&[-c, c]), Source::Gaussian { sigma: 1.0 });
        assert!((d - (1.0 - 2.0 / std::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_distortion_matches_truncated_moment_formula() {
        // closed-form truncated Gaussian moments, no quadrature
        let moment = |a: f64, b: f64, c: f64| {
            let pa = if a.is_finite() { normal::pdf(a) } else { 0.0 };
            let pb = if b.is_finite() { normal::pdf(b) } else { 0.0 };
            let apa = if a.is_finite() { a * pa } else { 0.0 };
            let bpb = if b.is_finite() { b * pb } else { 0.0 };
            let p = normal::interval_prob(a, b);
            let m1 = pa - pb;
            let m2 = p + apa - bpb;
            m2 - 2.0 * c * m1 + c * c * p
        };
        let quant = q(&[-1.7, -0.6, 0.1, 0.9, 2.2]);
        let oracle: f64 = (0..quant.len())
            .map(|i| {
                let (a, b) = quant.cell(i);
                moment(a, b, quant.levels()[i])
            })
            .sum();
        let d = distortion(&quant, Source::Gaussian { sigma: 1.0 });
        assert!((d - oracle).abs() < 1e-12, "{d} vs {oracle}");
    }

    #[test]
    fn cell_probability_examples() {
        let p = gaussian_cell_probs(&q(&[-1.0, 1.0]), 2.0);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        assert_eq!(gaussian_cell_probs(&q(&[4.0]), 1.0), vec![1.0]);
        let p = gaussian_cell_probs(&q(&[-2.0, 0.0, 2.0]), 1.0);
        for (v, e) in p.iter().zip([0.15866, 0.68269, 0.15866]) {
            assert!((v - e).abs() < 1e-5);
        }
        let dense = ScalarQuantizer::uniform(1000, 0.01).unwrap();
        let s: f64 = gaussian_cell_probs(&dense, 1.0).iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
}
