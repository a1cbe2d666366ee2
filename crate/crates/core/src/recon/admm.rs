//! ℓ₁ minimization with the measurements constrained to a point (Basis
//! Pursuit) or to a quantization cell, by ADMM or by an exact simplex solve.

use nalgebra::{DMatrix, DVector};

use super::lp::l1_box_lp;
use super::lstsq::Projector;
use crate::model::MeasurementMatrix;
use crate::quant::BoxRegion;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BpMethod {
    /// Dual simplex on the linear program; exact up to rounding.
    Simplex,
    /// Alternating shrinkage and projection.
    Admm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub method: BpMethod,
    /// ADMM iterations or simplex pivots.
    pub max_iter: usize,
    pub rho: f64,
    pub eps_feas: f64,
    pub eps_obj: f64,
    /// Refit by least squares on `|x_i| > debias · ‖x‖∞`.
    pub debias: Option<f64>,
    /// Rescale the penalty by residual balancing every `BALANCE_EVERY` iterations.
    pub balance: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self { method: BpMethod::Simplex, max_iter: 20_000, rho: 1.0, eps_feas: 1e-8, eps_obj: 1e-9, debias: None, balance: false }
    }
}

const WINDOW: usize = 10;
const BALANCE_EVERY: usize = 10;

/// Residual balancing: returns the factor the penalty is multiplied by
/// (the scaled duals are divided by it).
fn balance_factor(primal: f64, dual: f64) -> f64 {
    if primal > 10.0 * dual {
        2.0
    } else if dual > 10.0 * primal {
        0.5
    } else {
        1.0
    }
}

#[derive(Debug, Clone)]
pub struct BpResult {
    pub x: DVector<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Feasibility measure of `x`: `‖Φx - y‖` for BP, the width-scaled box
    /// violation for QBP.
    pub residual: f64,
}

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn l1(x: &DVector<f64>) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

/// Convergence bookkeeping shared by both solvers: a sliding window of ℓ₁
/// objectives and the best iterate seen (feasible and smallest objective,
/// otherwise least infeasible).
struct Monitor {
    history: Vec<f64>,
    best: Option<(bool, f64, f64, DVector<f64>)>,
}

impl Monitor {
    fn new() -> Self {
        Self { history: Vec::new(), best: None }
    }

    /// Returns true once `x` is feasible and the objective has settled.
    fn observe(&mut self, x: &DVector<f64>, feasible: bool, violation: f64, eps_obj: f64) -> bool {
        let obj = l1(x);
        self.history.push(obj);
        let better = match &self.best {
            None => true,
            Some((bf, bobj, bviol, _)) => match (feasible, *bf) {
                (true, false) => true,
                (false, true) => false,
                (true, true) => obj < *bobj,
                (false, false) => violation < *bviol,
            },
        };
        if better {
            self.best = Some((feasible, obj, violation, x.clone()));
        }
        if !feasible || self.history.len() <= WINDOW {
            return false;
        }
        let old = self.history[self.history.len() - 1 - WINDOW];
        (obj - old).abs() <= eps_obj * old.max(obj).max(f64::MIN_POSITIVE)
    }

    fn finish(self, converged: bool, iterations: usize, last: DVector<f64>, last_violation: f64) -> BpResult {
        if converged {
            return BpResult { x: last, converged, iterations, residual: last_violation };
        }
        let (_, _, viol, x) = self.best.expect("at least one iterate");
        BpResult { x, converged, iterations, residual: viol }
    }
}

fn check_params(p: &SolverParams) -> Result<()> {
    if !(p.rho > 0.0) || p.max_iter == 0 {
        return Err(Error::Config(format!("bad solver parameters {p:?}")));
    }
    Ok(())
}

/// `min ‖x‖₁` subject to `Φx = y`.
pub fn bp_reconstruct(phi: &MeasurementMatrix, y: &DVector<f64>, params: &SolverParams) -> Result<BpResult> {
    check_params(params)?;
    let a = phi.entries();
    let (m, n) = a.shape();
    if y.len() != m {
        return Err(Error::DimensionMismatch { expected: m, actual: y.len() });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("non-finite measurements".into()));
    }
    if params.method == BpMethod::Simplex {
        let lp = l1_box_lp(a, y.as_slice(), y.as_slice(), params.max_iter)?;
        let residual = (a * &lp.x - y).norm();
        let r = BpResult { x: lp.x, converged: true, iterations: lp.pivots, residual };
        return Ok(debias(phi, r, y, params.debias));
    }
    // affine projection v - Φᵀ(ΦΦᵀ)⁻¹(Φv - y)
    let gram = a * a.transpose();
    let chol = gram.cholesky().ok_or_else(|| Error::RankDeficient { support: (0..n).collect() })?;
    let pinv = a.transpose() * chol.inverse();

    let mut rho = params.rho;
    let scale = y.norm().max(1.0);
    let mut z = DVector::zeros(n);
    let mut u = DVector::zeros(n);
    let mut monitor = Monitor::new();
    let mut violation = f64::INFINITY;
    for it in 1..=params.max_iter {
        let v = &z - &u;
        let x = &v - &pinv * (a * &v - y);
        let xu = &x + &u;
        let z_prev = std::mem::replace(&mut z, xu.map(|e| soft(e, 1.0 / rho)));
        u = xu - &z;
        if params.balance && it % BALANCE_EVERY == 0 {
            let f = balance_factor((&x - &z).norm(), rho * (&z - &z_prev).norm());
            rho *= f;
            u /= f;
        }
        violation = (a * &z - y).norm();
        if monitor.observe(&z, violation <= params.eps_feas * scale, violation, params.eps_obj) {
            return Ok(debias(phi, monitor.finish(true, it, z, violation), y, params.debias));
        }
    }
    Ok(debias(phi, monitor.finish(false, params.max_iter, z, violation), y, params.debias))
}

/// `min ‖x‖₁` subject to `Φx ∈ region`.
pub fn qbp_reconstruct(phi: &MeasurementMatrix, region: &BoxRegion, params: &SolverParams) -> Result<BpResult> {
    check_params(params)?;
    let a = phi.entries();
    let (m, n) = a.shape();
    if region.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, actual: region.dim() });
    }
    if params.method == BpMethod::Simplex {
        let lp = l1_box_lp(a, region.lower(), region.upper(), params.max_iter)?;
        let residual = region.scaled_violation(&(a * &lp.x));
        return Ok(BpResult { x: lp.x, converged: true, iterations: lp.pivots, residual });
    }
    // (I + ΦᵀΦ)⁻¹ = I - Φᵀ (I + ΦΦᵀ)⁻¹ Φ
    let g = (DMatrix::identity(m, m) + a * a.transpose())
        .cholesky()
        .expect("I + ΦΦᵀ is positive definite")
        .inverse();
    let solve = |r: DVector<f64>| -> DVector<f64> {
        let s = &g * (a * &r);
        r - a.tr_mul(&s)
    };

    let mut rho = params.rho;
    let mut x = DVector::zeros(n);
    let mut u = DVector::zeros(n);
    let mut z = region.clip(&DVector::zeros(m));
    let mut v = DVector::zeros(m);
    let mut monitor = Monitor::new();
    let mut violation = f64::INFINITY;
    for it in 1..=params.max_iter {
        let w = solve(&x - &u + a.tr_mul(&(&z - &v)));
        let wu = &w + &u;
        let x_prev = std::mem::replace(&mut x, wu.map(|e| soft(e, 1.0 / rho)));
        u = wu - &x;
        let aw = a * &w;
        let awv = &aw + &v;
        let z_prev = std::mem::replace(&mut z, region.clip(&awv));
        v = awv - &z;
        if params.balance && it % BALANCE_EVERY == 0 {
            let primal = ((&w - &x).norm_squared() + (&aw - &z).norm_squared()).sqrt();
            let dual = rho * ((&x - &x_prev).norm_squared() + (a.tr_mul(&(&z - &z_prev))).norm_squared()).sqrt();
            let f = balance_factor(primal, dual);
            rho *= f;
            u /= f;
            v /= f;
        }
        violation = region.scaled_violation(&(a * &x));
        if monitor.observe(&x, violation <= params.eps_feas, violation, params.eps_obj) {
            return Ok(monitor.finish(true, it, x, violation));
        }
    }
    Ok(monitor.finish(false, params.max_iter, x, violation))
}

fn debias(phi: &MeasurementMatrix, mut r: BpResult, y: &DVector<f64>, thresh: Option<f64>) -> BpResult {
    let Some(thresh) = thresh else {
        return r;
    };
    let cutoff = thresh * r.x.amax();
    let support: Vec<usize> = (0..r.x.len()).filter(|&j| r.x[j].abs() > cutoff).collect();
    if support.is_empty() || support.len() > phi.rows() {
        return r;
    }
    let Ok(p) = Projector::for_support(phi.entries(), &support) else {
        return r;
    };
    let c = p.coeff(y);
    r.x.fill(0.0);
    for (&j, &v) in support.iter().zip(c.iter()) {
        r.x[j] = v;
    }
    r.residual = p.resid(y).norm();
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gen_gaussian_matrix, gen_sparse_signal, measure, GenMode, MatrixMode};

    const METHODS: [BpMethod; 2] = [BpMethod::Simplex, BpMethod::Admm];

    fn with(method: BpMethod) -> SolverParams {
        SolverParams { method, ..SolverParams::default() }
    }

    #[test]
    fn zero_measurements_give_zero() {
        let phi = gen_gaussian_matrix(10, 20, 2, GenMode::ColumnNormalized).unwrap();
        for method in METHODS {
            let r = bp_reconstruct(&phi, &DVector::zeros(10), &with(method)).unwrap();
            assert!(r.converged && r.x.iter().all(|&v| v == 0.0));
            let r = qbp_reconstruct(&phi, &BoxRegion::unbounded(10), &with(method)).unwrap();
            assert!(r.converged && r.x.norm() < 1e-12);
        }
    }

    #[test]
    fn orthonormal_square_matrix() {
        let q = gen_gaussian_matrix(8, 8, 4, GenMode::IidScaled).unwrap().entries().clone().qr().q();
        let phi = MeasurementMatrix::from_entries(q.clone(), MatrixMode::IidScaled, None).unwrap();
        let y = DVector::from_fn(8, |i, _| i as f64 - 3.0);
        for method in METHODS {
            let r = bp_reconstruct(&phi, &y, &with(method)).unwrap();
            assert!(r.converged);
            assert!((r.x - q.tr_mul(&y)).norm() < 1e-7);
        }
    }

    #[test]
    fn exact_instance_with_debias() {
        let phi = gen_gaussian_matrix(128, 256, 11, GenMode::ColumnNormalized).unwrap();
        let x = gen_sparse_signal(256, 6, 11).unwrap();
        let y = measure(&phi, &x).unwrap();
        for method in METHODS {
            let r = bp_reconstruct(&phi, &y, &SolverParams { debias: Some(1e-6), ..with(method) }).unwrap();
            assert!(r.converged);
            assert!((r.x - x.values()).norm() < 1e-4);
        }
    }

    #[test]
    fn singleton_box_matches_bp() {
        let phi = gen_gaussian_matrix(40, 80, 6, GenMode::ColumnNormalized).unwrap();
        let x = gen_sparse_signal(80, 8, 6).unwrap();
        let y = measure(&phi, &x).unwrap();
        for method in METHODS {
            let bp = bp_reconstruct(&phi, &y, &with(method)).unwrap();
            let qbp = qbp_reconstruct(&phi, &BoxRegion::singleton(&y), &with(method)).unwrap();
            assert!(bp.converged && qbp.converged);
            assert!((bp.x - qbp.x).norm() < 1e-6);
        }
    }

    #[test]
    fn minimizer_beats_the_true_signal() {
        let phi = gen_gaussian_matrix(20, 40, 8, GenMode::ColumnNormalized).unwrap();
        let x = gen_sparse_signal(40, 9, 8).unwrap();
        let y = measure(&phi, &x).unwrap();
        let lo: Vec<f64> = y.iter().map(|v| v - 0.05).collect();
        let hi: Vec<f64> = y.iter().map(|v| v + 0.05).collect();
        let region = BoxRegion::new(lo, hi).unwrap();
        for method in METHODS {
            let r = qbp_reconstruct(&phi, &region, &with(method)).unwrap();
            assert!(r.converged);
            assert!(l1(&r.x) <= l1(x.values()) + 1e-8);
            assert!(region.scaled_violation(&(phi.entries() * &r.x)) <= 1e-8);
            let r = bp_reconstruct(&phi, &y, &with(method)).unwrap();
            assert!(l1(&r.x) <= l1(x.values()) + 1e-8);
        }
    }

    #[test]
    fn methods_agree_on_a_quantized_instance() {
        let phi = gen_gaussian_matrix(30, 60, 9, GenMode::ColumnNormalized).unwrap();
        let x = gen_sparse_signal(60, 4, 9).unwrap();
        let y = measure(&phi, &x).unwrap();
        let lo: Vec<f64> = y.iter().map(|v| (v * 16.0).floor() / 16.0).collect();
        let hi: Vec<f64> = lo.iter().map(|v| v + 1.0 / 16.0).collect();
        let region = BoxRegion::new(lo, hi).unwrap();
        let exact = qbp_reconstruct(&phi, &region, &SolverParams::default()).unwrap();
        let admm = qbp_reconstruct(&phi, &region, &SolverParams { max_iter: 200_000, ..with(BpMethod::Admm) }).unwrap();
        assert!((l1(&exact.x) - l1(&admm.x)).abs() < 1e-6 * l1(&exact.x), "{} vs {}", l1(&exact.x), l1(&admm.x));
    }
}
