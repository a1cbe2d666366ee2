use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Smallest-to-largest singular value ratio below which a column set counts
/// as rank deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Orthogonal projection onto the span of a full-rank column set, by thin QR.
#[derive(Debug, Clone)]
pub struct Projector {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl Projector {
    pub fn new(phi_t: &DMatrix<f64>) -> Result<Self> {
        let support: Vec<usize> = (0..phi_t.ncols()).collect();
        Self::build(phi_t.clone(), &support)
    }

    /// Projector for the columns of `phi` indexed by `support`; a rank error
    /// names the support.
    pub fn for_support(phi: &DMatrix<f64>, support: &[usize]) -> Result<Self> {
        Self::build(phi.select_columns(support), support)
    }

    fn build(phi_t: DMatrix<f64>, support: &[usize]) -> Result<Self> {
        let (m, k) = phi_t.shape();
        let deficient = || Error::RankDeficient { support: support.to_vec() };
        if k == 0 {
            return Ok(Self { q: DMatrix::zeros(m, 0), r: DMatrix::zeros(0, 0) });
        }
        if k > m {
            return Err(deficient());
        }
        let qr = phi_t.qr();
        let (q, r) = (qr.q(), qr.r());
        let sv = r.singular_values();
        let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
        if !(hi > 0.0) || lo <= RANK_TOL * hi {
            return Err(deficient());
        }
        Ok(Self { q, r })
    }

    pub fn rank(&self) -> usize {
        self.q.ncols()
    }

    /// Orthonormal basis of the span, `m × rank`.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// Least-squares coefficients `(Φ_Tᵀ Φ_T)⁻¹ Φ_Tᵀ y`.
    pub fn coeff(&self, y: &DVector<f64>) -> DVector<f64> {
        if self.rank() == 0 {
            return DVector::zeros(0);
        }
        let qty = self.q.tr_mul(y);
        self.r.solve_upper_triangular(&qty).expect("R is nonsingular by construction")
    }

    pub fn proj(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.q * self.q.tr_mul(y)
    }

    /// `y - proj(y)`, with one reorthogonalization pass so the result stays
    /// orthogonal to the columns when `y` lies almost in their span.
    pub fn resid(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut r = y - self.proj(y);
        r -= self.proj(&r);
        r
    }
}

pub fn pcoeff(y: &DVector<f64>, phi_t: &DMatrix<f64>) -> Result<DVector<f64>> {
    Ok(Projector::new(phi_t)?.coeff(y))
}

pub fn proj(y: &DVector<f64>, phi_t: &DMatrix<f64>) -> Result<DVector<f64>> {
    Ok(Projector::new(phi_t)?.proj(y))
}

pub fn resid(y: &DVector<f64>, phi_t: &DMatrix<f64>) -> Result<DVector<f64>> {
    Ok(Projector::new(phi_t)?.resid(y))
}
