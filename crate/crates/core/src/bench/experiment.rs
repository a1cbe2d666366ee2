use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::config::{Algorithm, ExperimentConfig, QuantizerKind, Training};
use crate::model::{gen_gaussian_matrix, gen_sparse_signal, measure, GenMode, MeasurementMatrix, SparseSignal};
use crate::quant::{box_region, lloyd_design, uniform_design, LloydInit, LloydParams, QuantizedVector, ScalarQuantizer, Source};
use crate::recon::{bp_reconstruct, qbp_reconstruct, qsp_reconstruct, sp_reconstruct, Halt, SolverParams, SpParams};
use crate::rng::{self, domain, Gaussian};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub rate: u32,
    pub quantizer: QuantizerKind,
    pub algorithm: Algorithm,
    /// `‖ŷ - y‖² / m`.
    pub measurement_mse: f64,
    /// `‖x̂ - x‖² / N`; NaN when the reconstruction failed.
    pub reconstruction_mse: f64,
    /// The nonzero set of `x̂` equals the true support.
    pub support_recovered: bool,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time_seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct DesignedQuantizer {
    pub rate: u32,
    pub kind: QuantizerKind,
    pub quantizer: ScalarQuantizer,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub quantizers: Vec<DesignedQuantizer>,
    pub records: Vec<TrialRecord>,
}

/// Measurements of independent `(Φ, x)` draws, pooled. Only the `K` columns
/// on the support of each draw are generated; this has the same law as
/// building the whole matrix.
pub fn training_samples(cfg: &ExperimentConfig) -> Vec<f64> {
    let (m, n, k) = (cfg.m, cfg.n, cfg.k);
    let mut out = Vec::with_capacity(cfg.training_samples + m);
    let mut draw = 0u64;
    while out.len() < cfg.training_samples {
        let mut rng = rng::keyed_rng(cfg.master_seed, domain::TRAINING, draw);
        let _support = rng::random_subset(&mut rng, n, k);
        let mut g = Gaussian::new(rng);
        let mut cols = DMatrix::<f64>::zeros(m, k);
        g.fill(cols.as_mut_slice());
        match cfg.matrix_mode {
            GenMode::IidScaled => cols /= (m as f64).sqrt(),
            GenMode::ColumnNormalized => {
                for mut c in cols.column_iter_mut() {
                    let norm = c.norm();
                    c /= norm;
                }
            }
        }
        let mut x = DVector::zeros(k);
        g.fill(x.as_mut_slice());
        out.extend((cols * x).iter());
        draw += 1;
    }
    out.truncate(cfg.training_samples);
    out
}

/// The mid-rise uniform quantizer with step `√(2πe)·σ·2^{-R}` whose `M`
/// cells of width `Δ` span at least `±8σ`.
pub fn entropy_coded_quantizer(rate: u32, sigma: f64) -> Result<ScalarQuantizer> {
    let step = (2.0 * std::f64::consts::PI * std::f64::consts::E).sqrt() * sigma * (-(rate as f64)).exp2();
    let half = (8.0 * sigma / step).ceil() as usize;
    ScalarQuantizer::uniform(2 * half, step)
}

/// Designs every configured quantizer at every rate, in config order.
pub fn design_quantizers(cfg: &ExperimentConfig) -> Result<Vec<DesignedQuantizer>> {
    let samples = match cfg.quantizer_training {
        Training::Empirical => Some(training_samples(cfg)),
        Training::Analytic => None,
    };
    let source = match &samples {
        Some(s) => Source::Samples(s),
        None => Source::Gaussian { sigma: cfg.sigma() },
    };
    let sigma = match &samples {
        Some(s) => {
            let mean = s.iter().sum::<f64>() / s.len() as f64;
            (s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / s.len() as f64).sqrt()
        }
        None => cfg.sigma(),
    };
    let mut out = Vec::new();
    for &rate in &cfg.rates {
        let levels = 1usize << rate;
        for &kind in &cfg.quantizers {
            let quantizer = match kind {
                QuantizerKind::Lloyd => lloyd_design(source, levels, &LloydParams::with_init(LloydInit::Companded))?.quantizer,
                QuantizerKind::Uniform => uniform_design(source, levels, None)?.quantizer,
                QuantizerKind::Entropy => entropy_coded_quantizer(rate, sigma)?,
            };
            out.push(DesignedQuantizer { rate, kind, quantizer });
        }
    }
    Ok(out)
}

pub fn trial_matrix(cfg: &ExperimentConfig, trial: usize) -> Result<MeasurementMatrix> {
    gen_gaussian_matrix(cfg.m, cfg.n, rng::derive_seed(cfg.master_seed, domain::MATRIX, trial as u64), cfg.matrix_mode)
}

pub fn trial_signal(cfg: &ExperimentConfig, trial: usize) -> Result<SparseSignal> {
    gen_sparse_signal(cfg.n, cfg.k, rng::derive_seed(cfg.master_seed, domain::SIGNAL, trial as u64))
}

struct Outcome {
    x: DVector<f64>,
    iterations: usize,
    converged: bool,
}

fn reconstruct(
    cfg: &ExperimentConfig,
    algorithm: Algorithm,
    phi: &MeasurementMatrix,
    q: &ScalarQuantizer,
    qv: &QuantizedVector,
) -> Result<Outcome> {
    let sp = SpParams { max_iter: cfg.sp_max_iter, ..SpParams::default() };
    let bp = SolverParams { method: cfg.bp_solver.into(), max_iter: cfg.bp_max_iter, debias: cfg.debias, ..SolverParams::default() };
    Ok(match algorithm {
        Algorithm::Sp | Algorithm::Qsp => {
            let r = if algorithm == Algorithm::Sp {
                sp_reconstruct(phi, &qv.values, cfg.k, &sp)?
            } else {
                qsp_reconstruct(phi, &box_region(q, &qv.indices)?, &qv.values, cfg.k, &sp)?
            };
            Outcome { x: r.x.values().clone(), iterations: r.trace.iterations, converged: r.trace.halt != Halt::MaxIter }
        }
        Algorithm::Bp => {
            let r = bp_reconstruct(phi, &qv.values, &bp)?;
            Outcome { x: r.x, iterations: r.iterations, converged: r.converged }
        }
        Algorithm::Qbp => {
            let r = qbp_reconstruct(phi, &box_region(q, &qv.indices)?, &bp)?;
            Outcome { x: r.x, iterations: r.iterations, converged: r.converged }
        }
    })
}

fn run_trial(cfg: &ExperimentConfig, quantizers: &[DesignedQuantizer], trial: usize) -> Vec<TrialRecord> {
    let data = trial_matrix(cfg, trial).and_then(|phi| {
        let x = trial_signal(cfg, trial)?;
        let y = measure(&phi, &x)?;
        Ok((phi, x, y))
    });
    let mut out = Vec::with_capacity(quantizers.len() * cfg.algorithms.len());
    for dq in quantizers {
        let quantized = data.as_ref().ok().map(|(_, _, y)| {
            let qv = dq.quantizer.quantize(y);
            let mse = (&qv.values - y).norm_squared() / cfg.m as f64;
            (qv, mse)
        });
        for &algorithm in &cfg.algorithms {
            let mut rec = TrialRecord {
                trial_index: trial,
                rate: dq.rate,
                quantizer: dq.kind,
                algorithm,
                measurement_mse: f64::NAN,
                reconstruction_mse: f64::NAN,
                support_recovered: false,
                iterations: 0,
                converged: false,
                wall_time_seconds: 0.0,
                error: None,
            };
            let ((phi, x, _), (qv, mse)) = match (&data, &quantized) {
                (Ok(d), Some(q)) => (d, q),
                (Err(e), _) => {
                    rec.error = Some(e.to_string());
                    out.push(rec);
                    continue;
                }
                (Ok(_), None) => unreachable!("quantized whenever the data exist"),
            };
            rec.measurement_mse = *mse;
            let start = Instant::now();
            let result = reconstruct(cfg, algorithm, phi, &dq.quantizer, qv);
            rec.wall_time_seconds = start.elapsed().as_secs_f64();
            match result {
                Ok(o) => {
                    rec.reconstruction_mse = (&o.x - x.values()).norm_squared() / cfg.n as f64;
                    let support: Vec<usize> = (0..o.x.len()).filter(|&j| o.x[j] != 0.0).collect();
                    rec.support_recovered = support == x.support();
                    rec.iterations = o.iterations;
                    rec.converged = o.converged;
                }
                Err(e) => rec.error = Some(e.to_string()),
            }
            out.push(rec);
        }
    }
    out
}

/// Runs every trial on a pool of `workers` threads (0 means one per core).
/// Records come out ordered by (trial, rate, quantizer, algorithm), each
/// inner key in config order, whatever the completion order.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let quantizers = design_quantizers(cfg)?;
    run_with_quantizers(cfg, quantizers, workers)
}

pub fn run_with_quantizers(cfg: &ExperimentConfig, quantizers: Vec<DesignedQuantizer>, workers: usize) -> Result<ExperimentOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let per_trial: Vec<Vec<TrialRecord>> =
        pool.install(|| (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, &quantizers, t)).collect());
    Ok(ExperimentOutput { quantizers, records: per_trial.into_iter().flatten().collect() })
}
