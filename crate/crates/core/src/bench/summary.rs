use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::config::{Algorithm, QuantizerKind};
use super::experiment::{ExperimentOutput, TrialRecord};
use crate::io::format_quantizer;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub rate: u32,
    pub quantizer: QuantizerKind,
    pub algorithm: Algorithm,
    pub trials: usize,
    pub failures: usize,
    pub mean_measurement_mse: f64,
    pub stderr_measurement_mse: f64,
    /// Over the trials whose reconstruction succeeded.
    pub mean_reconstruction_mse: f64,
    pub stderr_reconstruction_mse: f64,
    pub support_recovery_rate: f64,
    pub converged_rate: f64,
}

/// Sample mean and standard error `s/√n` with the `n - 1` variance; the
/// error of a single value is zero.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// One summary per `(rate, quantizer, algorithm)`, in order of first appearance.
pub fn summarize(records: &[TrialRecord]) -> Vec<Summary> {
    let mut keys: Vec<(u32, QuantizerKind, Algorithm)> = Vec::new();
    for r in records {
        let key = (r.rate, r.quantizer, r.algorithm);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(rate, quantizer, algorithm)| {
            let group: Vec<&TrialRecord> =
                records.iter().filter(|r| (r.rate, r.quantizer, r.algorithm) == (rate, quantizer, algorithm)).collect();
            let meas: Vec<f64> = group.iter().map(|r| r.measurement_mse).filter(|v| !v.is_nan()).collect();
            let ok: Vec<&&TrialRecord> = group.iter().filter(|r| r.error.is_none()).collect();
            let recon: Vec<f64> = ok.iter().map(|r| r.reconstruction_mse).collect();
            let (mm, ms) = mean_stderr(&meas);
            let (rm, rs) = mean_stderr(&recon);
            let frac = |pred: fn(&TrialRecord) -> bool| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().filter(|r| pred(r)).count() as f64 / ok.len() as f64
                }
            };
            Summary {
                rate,
                quantizer,
                algorithm,
                trials: group.len(),
                failures: group.len() - ok.len(),
                mean_measurement_mse: mm,
                stderr_measurement_mse: ms,
                mean_reconstruction_mse: rm,
                stderr_reconstruction_mse: rs,
                support_recovery_rate: frac(|r| r.support_recovered),
                converged_rate: frac(|r| r.converged),
            }
        })
        .collect()
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Everything except wall time, so identical configs give identical bytes.
pub fn records_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from("trial,rate,quantizer,algorithm,measurement_mse,reconstruction_mse,support_recovered,iterations,converged,error\n");
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.trial_index,
            r.rate,
            r.quantizer,
            r.algorithm,
            num(r.measurement_mse),
            num(r.reconstruction_mse),
            r.support_recovered,
            r.iterations,
            r.converged,
            csv_field(r.error.as_deref().unwrap_or(""))
        )
        .unwrap();
    }
    out
}

pub fn timings_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from("trial,rate,quantizer,algorithm,wall_time_seconds\n");
    for r in records {
        writeln!(out, "{},{},{},{},{}", r.trial_index, r.rate, r.quantizer, r.algorithm, num(r.wall_time_seconds)).unwrap();
    }
    out
}

pub fn summary_csv(summaries: &[Summary]) -> String {
    let mut out = String::from(
        "rate,quantizer,algorithm,trials,failures,mean_measurement_mse,stderr_measurement_mse,\
         mean_reconstruction_mse,stderr_reconstruction_mse,support_recovery_rate,converged_rate\n",
    );
    for s in summaries {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            s.rate,
            s.quantizer,
            s.algorithm,
            s.trials,
            s.failures,
            num(s.mean_measurement_mse),
            num(s.stderr_measurement_mse),
            num(s.mean_reconstruction_mse),
            num(s.stderr_reconstruction_mse),
            num(s.support_recovery_rate),
            num(s.converged_rate)
        )
        .unwrap();
    }
    out
}

/// Measurement distortion per `(rate, quantizer)`; it does not depend on the
/// algorithm, so the first algorithm's group is used.
pub fn fig1_csv(summaries: &[Summary]) -> String {
    let mut out = String::from("rate,quantizer,mean_measurement_mse,stderr\n");
    let mut seen = Vec::new();
    for s in summaries {
        if !seen.contains(&(s.rate, s.quantizer)) {
            seen.push((s.rate, s.quantizer));
            writeln!(out, "{},{},{},{}", s.rate, s.quantizer, num(s.mean_measurement_mse), num(s.stderr_measurement_mse)).unwrap();
        }
    }
    out
}

fn fig2_csv(summaries: &[Summary], modified: bool) -> String {
    let mut out = String::from("rate,quantizer,algorithm,mean_reconstruction_mse,stderr\n");
    for s in summaries.iter().filter(|s| s.algorithm.is_modified() == modified) {
        writeln!(
            out,
            "{},{},{},{},{}",
            s.rate,
            s.quantizer,
            s.algorithm,
            num(s.mean_reconstruction_mse),
            num(s.stderr_reconstruction_mse)
        )
        .unwrap();
    }
    out
}

/// Reconstruction distortion of the standard algorithms (SP, BP).
pub fn fig2a_csv(summaries: &[Summary]) -> String {
    fig2_csv(summaries, false)
}

/// Reconstruction distortion of the quantization-aware algorithms (QSP, QBP).
pub fn fig2b_csv(summaries: &[Summary]) -> String {
    fig2_csv(summaries, true)
}

pub fn emit_fig_data(summaries: &[Summary], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("fig1.csv"), fig1_csv(summaries))?;
    fs::write(dir.join("fig2a.csv"), fig2a_csv(summaries))?;
    fs::write(dir.join("fig2b.csv"), fig2b_csv(summaries))?;
    Ok(())
}

/// Writes records, timings, summaries, figure tables and the designed
/// quantizers under `dir`.
pub fn emit_all(output: &ExperimentOutput, dir: &Path) -> Result<Vec<Summary>> {
    fs::create_dir_all(dir.join("quantizers"))?;
    fs::write(dir.join("records.csv"), records_csv(&output.records))?;
    fs::write(dir.join("timings.csv"), timings_csv(&output.records))?;
    let summaries = summarize(&output.records);
    fs::write(dir.join("summary.csv"), summary_csv(&summaries))?;
    emit_fig_data(&summaries, dir)?;
    for dq in &output.quantizers {
        fs::write(dir.join("quantizers").join(format!("{}_r{}.txt", dq.kind, dq.rate)), format_quantizer(&dq.quantizer))?;
    }
    Ok(summaries)
}
