//! Optimal symmetric uniform quantizer by step-size search.

use super::scalar::{distortion, ScalarQuantizer};
use super::Source;
use crate::{Error, Result};

/// Candidate steps: `points` geometrically spaced values on `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl StepGrid {
    /// `[scale/M, 24·scale/M]` with 64 points. Covers the optimum for every
    /// `M` from 2 to at least 2^16 on a Gaussian of standard deviation `scale`.
    pub fn for_levels(m: usize, scale: f64) -> Self {
        let m = m as f64;
        Self { min: scale / m, max: 24.0 * scale / m, points: 64 }
    }

    fn steps(&self) -> Vec<f64> {
        let n = self.points;
        let ratio = (self.max / self.min).ln();
        (0..n).map(|i| self.min * (ratio * i as f64 / (n - 1) as f64).exp()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct UniformDesign {
    pub quantizer: ScalarQuantizer,
    pub step: f64,
    pub distortion: f64,
}

/// Searches the step of the `M`-level mid-rise quantizer `(i - (M+1)/2)·Δ`
/// minimizing distortion under `source`: a grid scan, then golden-section
/// refinement between the neighbours of the best grid point.
pub fn uniform_design(source: Source<'_>, m: usize, grid: Option<StepGrid>) -> Result<UniformDesign> {
    if m < 2 {
        return Err(Error::Design(format!("uniform design needs M >= 2, got {m}")));
    }
    let scale = match source {
        Source::Gaussian { sigma } => {
            if !(sigma > 0.0) || !sigma.is_finite() {
                return Err(Error::Design(format!("Gaussian source needs sigma > 0, got {sigma}")));
            }
            sigma
        }
        Source::Samples(s) => {
            if s.is_empty() || s.iter().any(|v| !v.is_finite()) {
                return Err(Error::Design("samples must be nonempty and finite".into()));
            }
            let rms = (s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt();
            if rms == 0.0 {
                return Err(Error::Design("all samples are zero".into()));
            }
            rms
        }
    };
    let grid = grid.unwrap_or_else(|| StepGrid::for_levels(m, scale));
    if grid.points < 3 || !(grid.min > 0.0) || !(grid.max > grid.min) || !grid.max.is_finite() {
        return Err(Error::Design(format!("bad step grid {grid:?}")));
    }
    let objective = |step: f64| -> Result<f64> { Ok(distortion(&ScalarQuantizer::uniform(m, step)?, source)) };

    let steps = grid.steps();
    let values = steps.iter().map(|&s| objective(s)).collect::<Result<Vec<_>>>()?;
    let best = (0..steps.len()).min_by(|&i, &j| values[i].total_cmp(&values[j])).unwrap();
    if best == 0 || best + 1 == steps.len() {
        return Err(Error::NotBracketed { index: best, len: steps.len() });
    }

    let (step, d) = golden_section(&objective, steps[best - 1], steps[best + 1], (steps[best], values[best]))?;
    Ok(UniformDesign { quantizer: ScalarQuantizer::uniform(m, step)?, step, distortion: d })
}

fn golden_section<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64, best: (f64, f64)) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    let mut best = best;
    while b - a > 1e-12 * b {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
        for (x, v) in [(c, fc), (d, fd)] {
            if v < best.1 {
                best = (x, v);
            }
        }
    }
    Ok(best)
}
