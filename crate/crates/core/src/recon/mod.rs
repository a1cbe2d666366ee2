//! Sparse reconstruction from exact or quantized measurements.

mod admm;
mod cproj;
mod lp;
mod lstsq;
mod sp;

use nalgebra::DVector;

pub use admm::{bp_reconstruct, qbp_reconstruct, BpMethod, BpResult, SolverParams};
pub use cproj::{constrained_projection, constrained_projection_with, pcoeff_q, resid_q, ConstrainedProjection, CprojParams, Phase};
pub use lp::{l1_box_lp, LpSolution};
pub use lstsq::{pcoeff, proj, resid, Projector, RANK_TOL};
pub use sp::{qsp_reconstruct, sp_reconstruct, Halt, SpParams, SpResult, SpTrace};

/// `‖x - x̂‖²`.
pub fn reconstruction_error(x: &DVector<f64>, x_hat: &DVector<f64>) -> f64 {
    (x - x_hat).norm_squared()
}
