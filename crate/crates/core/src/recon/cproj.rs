//! Nearest approximation of a quantization cell by a column span.
//!
//! Among all pairs `(x, y)` with `y` in the box minimizing `‖y - Φ_T x‖`, the
//! pair whose `y` is closest to the observed `Ŷ`.

use nalgebra::{DMatrix, DVector};

use super::lstsq::Projector;
use crate::quant::BoxRegion;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CprojParams {
    /// Intersection threshold; `None` means `1e-9 · (1 + ‖Ŷ‖)`.
    pub tol: Option<f64>,
    pub max_iter: usize,
}

impl Default for CprojParams {
    fn default() -> Self {
        Self { tol: None, max_iter: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Box and span are disjoint; the alternating-minimization limit.
    Disjoint,
    /// They intersect; the point of the intersection nearest `Ŷ`.
    Intersecting,
}

#[derive(Debug, Clone)]
pub struct ConstrainedProjection {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    /// Attained `‖ỹ - Φ_T x̃‖`, exactly zero in the intersecting case.
    pub dist: f64,
    /// `ỹ - Φ_T x̃`, exactly zero in the intersecting case.
    pub resid: DVector<f64>,
    pub phase: Phase,
    pub iterations: usize,
}

pub fn constrained_projection(
    phi_t: &DMatrix<f64>,
    region: &BoxRegion,
    y_hat: &DVector<f64>,
    params: &CprojParams,
) -> Result<ConstrainedProjection> {
    constrained_projection_with(&Projector::new(phi_t)?, region, y_hat, params)
}

pub fn constrained_projection_with(
    projector: &Projector,
    region: &BoxRegion,
    y_hat: &DVector<f64>,
    params: &CprojParams,
) -> Result<ConstrainedProjection> {
    if region.dim() != y_hat.len() {
        return Err(Error::DimensionMismatch { expected: region.dim(), actual: y_hat.len() });
    }
    let tol = params.tol.unwrap_or(1e-9 * (1.0 + y_hat.norm()));
    let q = projector.basis();

    // Phase 1: minimize dist(Qz, box)² over the coefficients z of the
    // orthonormal basis.
    let (z, f, mut iterations) = min_box_distance(q, region, y_hat, tol, params.max_iter)?;
    if f > tol {
        let y = region.clip(&(q * &z));
        let r = projector.resid(&y);
        return Ok(ConstrainedProjection { x: projector.coeff(&y), dist: r.norm(), y, resid: r, phase: Phase::Disjoint, iterations });
    }

    // Phase 2: the point of box ∩ span nearest Ŷ, i.e. the projection of Qᵀ Ŷ
    // onto the polytope {z : l ≤ Qz ≤ u}.
    let feas = 1e-3 * tol;
    let y = match nearest_in_polytope(q, region, &q.tr_mul(y_hat), feas, params.max_iter)? {
        Nearest::Found { z, steps } => {
            iterations += steps;
            region.clip(&(q * z))
        }
        // only within tol of the span: keep the phase-1 point
        Nearest::Infeasible { steps } => {
            iterations += steps;
            region.clip(&(q * &z))
        }
    };
    let m = y.len();
    Ok(ConstrainedProjection { x: projector.coeff(&y), y, dist: 0.0, resid: DVector::zeros(m), phase: Phase::Intersecting, iterations })
}

/// `Σ (v_i - clip(v_i))²` and the residual vector `v - clip(v)`.
fn box_excess(region: &BoxRegion, v: &DVector<f64>) -> (f64, DVector<f64>) {
    let r = v - region.clip(v);
    (r.norm_squared(), r)
}

/// Minimizer over `α ≥ 0` of the convex piecewise quadratic `dist(v + αw, box)²`,
/// found where its piecewise linear derivative changes sign.
fn exact_step(region: &BoxRegion, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
    let (lo, hi) = (region.lower(), region.upper());
    let mut breaks: Vec<f64> = Vec::new();
    for i in 0..v.len() {
        if w[i] != 0.0 {
            for b in [lo[i], hi[i]] {
                let a = (b - v[i]) / w[i];
                if b.is_finite() && a > 0.0 {
                    breaks.push(a);
                }
            }
        }
    }
    breaks.sort_unstable_by(f64::total_cmp);
    breaks.dedup();
    let mut start = 0.0;
    for end in breaks.iter().copied().chain(std::iter::once(f64::INFINITY)) {
        // derivative g(α) = c0 + c1·α on (start, end)
        let mid = if end.is_finite() { 0.5 * (start + end) } else { start + 1.0 };
        let (mut c0, mut c1) = (0.0, 0.0);
        for i in 0..v.len() {
            let x = v[i] + mid * w[i];
            let b = if x > hi[i] { hi[i] } else if x < lo[i] { lo[i] } else { continue };
            c0 += 2.0 * (v[i] - b) * w[i];
            c1 += 2.0 * w[i] * w[i];
        }
        if c0 + c1 * end >= 0.0 || !end.is_finite() {
            return if c1 > 0.0 { (-c0 / c1).clamp(start, end) } else { start };
        }
        start = end;
    }
    start
}

/// Semismooth Newton on the piecewise quadratic `φ(z) = dist(Qz, box)²`,
/// started from `z = Qᵀ clip(Ŷ)`. Each step is the least-squares step on the
/// rows currently outside the box, followed by an exact line search. Returns the
/// final `z`, `√φ(z)` and the step count.
fn min_box_distance(
    q: &DMatrix<f64>,
    region: &BoxRegion,
    y_hat: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(DVector<f64>, f64, usize)> {
    let mut z = q.tr_mul(&region.clip(y_hat));
    let mut v = q * &z;
    let (mut phi, mut r) = box_excess(region, &v);
    let stall = (1e-3 * tol).powi(2);
    let mut iterations = 0;
    while phi.sqrt() > tol {
        if iterations == max_iter {
            return Err(Error::NotConverged { what: "constrained projection (phase 1)", iterations });
        }
        iterations += 1;
        let active: Vec<usize> = (0..r.len()).filter(|&i| r[i] != 0.0).collect();
        let qa = q.select_rows(&active);
        let ra = DVector::from_iterator(active.len(), active.iter().map(|&i| -r[i]));
        let Ok(d) = qa.svd(true, true).solve(&ra, 1e-12) else { break };
        let w = q * &d;
        let slope = 2.0 * r.dot(&w);
        if !(slope < 0.0) {
            break;
        }
        let alpha = exact_step(region, &v, &w);
        if !(alpha > 0.0) {
            break;
        }
        let v_next = &v + alpha * &w;
        let (phi_next, r_next) = box_excess(region, &v_next);
        if phi_next >= phi {
            break;
        }
        z += alpha * &d;
        let done = phi - phi_next <= stall + 1e-12 * phi;
        (v, phi, r) = (v_next, phi_next, r_next);
        if done {
            break;
        }
    }
    Ok((z, phi.sqrt(), iterations))
}

enum Nearest {
    Found { z: DVector<f64>, steps: usize },
    Infeasible { steps: usize },
}

/// Projection of `c` onto `{z : l_i ≤ q_iᵀ z ≤ u_i}` by the dual active-set
/// method of Goldfarb and Idnani with identity Hessian. Constraints are
/// written `n_jᵀ z ≥ b_j`; infinite bounds are dropped.
fn nearest_in_polytope(q: &DMatrix<f64>, region: &BoxRegion, c: &DVector<f64>, feas: f64, max_iter: usize) -> Result<Nearest> {
    let t = q.ncols();
    let mut normals: Vec<DVector<f64>> = Vec::new();
    let mut bounds: Vec<f64> = Vec::new();
    for i in 0..q.nrows() {
        let row: DVector<f64> = q.row(i).transpose();
        if region.lower()[i].is_finite() {
            normals.push(row.clone());
            bounds.push(region.lower()[i]);
        }
        if region.upper()[i].is_finite() {
            normals.push(-row);
            bounds.push(-region.upper()[i]);
        }
    }
    let slack = |z: &DVector<f64>, j: usize| normals[j].dot(z) - bounds[j];

    let mut z = c.clone();
    let mut active: Vec<usize> = Vec::new();
    let mut mult: Vec<f64> = Vec::new();
    let mut steps = 0;
    loop {
        let Some((p, s)) = (0..normals.len()).map(|j| (j, slack(&z, j))).min_by(|a, b| a.1.total_cmp(&b.1)) else {
            return Ok(Nearest::Found { z, steps });
        };
        if s >= -feas {
            return Ok(Nearest::Found { z, steps });
        }
        let np = &normals[p];
        let mut up = 0.0;
        loop {
            if steps == max_iter {
                return Err(Error::NotConverged { what: "constrained projection (phase 2)", iterations: steps });
            }
            steps += 1;
            // dual direction r with N r ≈ n_p, primal direction n_p - N r
            let r = if active.is_empty() {
                DVector::zeros(0)
            } else {
                let n = DMatrix::from_columns(&active.iter().map(|&j| normals[j].clone()).collect::<Vec<_>>());
                n.svd(true, true).solve(np, 1e-13).map_err(|e| Error::Solver(e.to_string()))?
            };
            let mut dir = np.clone();
            for (k, &j) in active.iter().enumerate() {
                dir.axpy(-r[k], &normals[j], 1.0);
            }
            let partial = (0..active.len())
                .filter(|&k| r[k] > 0.0)
                .map(|k| (mult[k] / r[k], k))
                .min_by(|a, b| a.0.total_cmp(&b.0));
            let curvature = dir.dot(np);
            let full = if dir.norm() > 1e-12 * np.norm().max(1.0) && curvature > 0.0 {
                Some(-slack(&z, p) / curvature)
            } else {
                None
            };
            match (full, partial) {
                (None, None) => return Ok(Nearest::Infeasible { steps }),
                (Some(tf), pa) if pa.is_none_or(|(tp, _)| tf <= tp) => {
                    z.axpy(tf, &dir, 1.0);
                    for (k, m) in mult.iter_mut().enumerate() {
                        *m -= tf * r[k];
                    }
                    active.push(p);
                    mult.push(up + tf);
                    break;
                }
                (full, Some((tp, k))) => {
                    if full.is_some() {
                        z.axpy(tp, &dir, 1.0);
                    }
                    for (i, m) in mult.iter_mut().enumerate() {
                        *m -= tp * r[i];
                    }
                    up += tp;
                    active.remove(k);
                    mult.remove(k);
                }
                (Some(_), None) => unreachable!(),
            }
        }
        if active.len() > t {
            return Err(Error::Solver("active set exceeds the subspace dimension".into()));
        }
    }
}

/// `ỹ - Φ_T x̃`.
pub fn resid_q(y_hat: &DVector<f64>, phi_t: &DMatrix<f64>, region: &BoxRegion) -> Result<DVector<f64>> {
    Ok(constrained_projection(phi_t, region, y_hat, &CprojParams::default())?.resid)
}

/// `x̃`.
pub fn pcoeff_q(y_hat: &DVector<f64>, phi_t: &DMatrix<f64>, region: &BoxRegion) -> Result<DVector<f64>> {
    Ok(constrained_projection(phi_t, region, y_hat, &CprojParams::default())?.x)
}
