use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use qcs::bench::{self, ExperimentConfig};
use qcs::bounds::{self, Algo, Deltas, Mus, Scheme};
use qcs::io;
use qcs::model::{self, binomial, RipMode};
use qcs::quant::{self, LloydInit, LloydParams, Source};
use qcs::recon::{self, BpMethod, CprojParams, SolverParams, SpParams};

#[derive(Parser)]
#[command(name = "qcs", version, about = "Quantized compressive sensing: quantizers, reconstruction, experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment from a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Design a scalar quantizer and print it in the quantizer text format.
    DesignQuantizer {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        rate: u32,
        /// Deviation of the Gaussian source.
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Train on these samples (vector file) instead of a Gaussian.
        #[arg(long)]
        samples: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a Huffman code for the cell probabilities.
        #[arg(long)]
        code: Option<PathBuf>,
    },
    /// Reconstruct a sparse signal; prints one value per line and a status footer.
    Reconstruct {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        measurements: PathBuf,
        #[arg(long, value_enum)]
        algo: Algo4,
        #[arg(long)]
        k: Option<usize>,
        /// Required for qsp and qbp; the measurements are mapped to its cells.
        #[arg(long)]
        quantizer: Option<PathBuf>,
        /// Intersection tolerance (sp, qsp) or feasibility tolerance (bp, qbp).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long, value_enum, default_value_t = Solver::Simplex)]
        solver: Solver,
        /// Least-squares refit threshold for bp and qbp, relative to the largest entry.
        #[arg(long)]
        debias: Option<f64>,
    },
    /// Print asymptotic distortion bounds as CSV.
    Bounds {
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        mu1: Option<f64>,
        #[arg(long)]
        mu2: Option<f64>,
        #[arg(long)]
        delta_k: Option<f64>,
        #[arg(long)]
        delta_3k: Option<f64>,
        #[arg(long)]
        delta_4k: Option<f64>,
        /// The deltas come from sampled supports.
        #[arg(long)]
        sampled: bool,
        /// Take m, μ₁, μ₂ and the deltas from this matrix (needs --k).
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, default_value_t = RipMode::DEFAULT_TRIALS)]
        rip_trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Kolmogorov-Smirnov distance of a scaled measurement coordinate from N(0, 1).
    CltCheck {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// High-resolution checks for Gaussian sources, printed as CSV.
    TheoremCheck {
        /// 1: Lloyd and uniform constants; 3: entropy-coded bracket.
        which: u8,
        #[arg(long, value_delimiter = ',', default_value = "8,10,12")]
        rates: Vec<u32>,
        /// Monte Carlo draws beside the quadrature values (theorem 1).
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Lloyd,
    Uniform,
    Entropy,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Algo4 {
    Sp,
    Bp,
    Qsp,
    Qbp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Simplex,
    Admm,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Experiment { config, out, workers } => experiment(config, out, workers),
        Command::DesignQuantizer { kind, rate, sigma, samples, out, code } => design(kind, rate, sigma, samples, out, code),
        Command::Reconstruct { matrix, measurements, algo, k, quantizer, tol, max_iter, solver, debias } => {
            reconstruct(matrix, measurements, algo, k, quantizer, tol, max_iter, solver, debias)
        }
        Command::Bounds { m, k, mu1, mu2, delta_k, delta_3k, delta_4k, sampled, matrix, rip_trials, seed } => {
            print_bounds(m, k, mu1, mu2, [delta_k, delta_3k, delta_4k], sampled, matrix, rip_trials, seed)
        }
        Command::CltCheck { m, k, n, samples, seed } => {
            let ks = bench::verify_clt(m, k, n, samples, seed)?;
            println!("ks={ks:.16e} n={samples} critical_1pct={:.16e}", 1.63 / (samples as f64).sqrt());
            Ok(())
        }
        Command::TheoremCheck { which, rates, samples, seed } => {
            match which {
                1 => print!("{}", bench::theorem1_csv(&bench::theorem1_check(&rates, samples, seed)?)),
                3 => print!("{}", bench::theorem3_csv(&bench::theorem3_check(&rates)?)),
                other => bail!("no check for theorem {other}; choose 1 or 3"),
            }
            Ok(())
        }
    }
}

fn experiment(config: PathBuf, out: PathBuf, workers: usize) -> Result<()> {
    let cfg = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
    let output = bench::run_experiment(&cfg, workers)?;
    let summaries = bench::emit_all(&output, &out)?;
    fs::write(out.join("overlay.csv"), bench::bound_overlay_csv(&cfg, &summaries))?;
    fs::write(out.join("config.json"), cfg.to_json() + "\n")?;
    let failures: usize = summaries.iter().map(|s| s.failures).sum();
    eprintln!("{} records, {} failed reconstructions, written to {}", output.records.len(), failures, out.display());
    Ok(())
}

fn design(kind: Kind, rate: u32, sigma: f64, samples: Option<PathBuf>, out: Option<PathBuf>, code: Option<PathBuf>) -> Result<()> {
    if !(1..=20).contains(&rate) {
        bail!("rate must be in 1..=20");
    }
    let data = samples.map(|p| io::read_vector(&p)).transpose()?;
    let source = match &data {
        Some(v) => Source::Samples(v.as_slice()),
        None => Source::Gaussian { sigma },
    };
    let levels = 1usize << rate;
    let q = match kind {
        Kind::Lloyd => quant::lloyd_design(source, levels, &LloydParams::with_init(LloydInit::Companded))?.quantizer,
        Kind::Uniform => quant::uniform_design(source, levels, None)?.quantizer,
        Kind::Entropy => {
            let s = match &data {
                Some(v) => {
                    let mean = v.mean();
                    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
                }
                None => sigma,
            };
            bench::entropy_coded_quantizer(rate, s)?
        }
    };
    let text = io::format_quantizer(&q);
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    eprintln!("distortion={:.16e}", quant::distortion(&q, source));
    if let Some(p) = code {
        let probs = match &data {
            Some(v) => {
                let mut counts = vec![0.0; q.len()];
                for &y in v.iter() {
                    counts[q.index(y)] += 1.0;
                }
                counts.iter().map(|c| c / v.len() as f64).collect::<Vec<_>>()
            }
            None => quant::gaussian_cell_probs(&q, sigma),
        };
        fs::write(p, io::format_prefix_code(&quant::huffman(&probs)?))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn reconstruct(
    matrix: PathBuf,
    measurements: PathBuf,
    algo: Algo4,
    k: Option<usize>,
    quantizer: Option<PathBuf>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    solver: Solver,
    debias: Option<f64>,
) -> Result<()> {
    let phi = io::read_matrix(&matrix)?;
    let y = io::read_vector(&measurements)?;
    let q = quantizer.map(|p| io::read_quantizer(&p)).transpose()?;
    let need_k = || k.context("--k is required for sp and qsp");
    let cell = || -> Result<_> {
        let q = q.as_ref().context("--quantizer is required for qsp and qbp")?;
        let qv = q.quantize(&y);
        Ok((quant::box_region(q, &qv.indices)?, qv.values))
    };
    let sp_params = SpParams { max_iter, cproj: CprojParams { tol, ..CprojParams::default() } };
    let mut bp_params = SolverParams {
        method: match solver {
            Solver::Simplex => BpMethod::Simplex,
            Solver::Admm => BpMethod::Admm,
        },
        debias,
        ..SolverParams::default()
    };
    if let Some(t) = tol {
        bp_params.eps_feas = t;
    }
    if let Some(n) = max_iter {
        bp_params.max_iter = n;
    }
    let (x, converged, iters, residual) = match algo {
        Algo4::Sp | Algo4::Qsp => {
            let r = if algo == Algo4::Sp {
                recon::sp_reconstruct(&phi, &y, need_k()?, &sp_params)?
            } else {
                let (region, y_hat) = cell()?;
                recon::qsp_reconstruct(&phi, &region, &y_hat, need_k()?, &sp_params)?
            };
            let last = *r.trace.residual_norms.last().unwrap();
            (r.x.values().clone(), r.trace.halt != recon::Halt::MaxIter, r.trace.iterations, last)
        }
        Algo4::Bp => {
            let r = recon::bp_reconstruct(&phi, &y, &bp_params)?;
            (r.x, r.converged, r.iterations, r.residual)
        }
        Algo4::Qbp => {
            let (region, _) = cell()?;
            let r = recon::qbp_reconstruct(&phi, &region, &bp_params)?;
            (r.x, r.converged, r.iterations, r.residual)
        }
    };
    for v in x.iter() {
        println!("{v:.16e}");
    }
    println!("converged={converged} iters={iters} residual={residual:.16e}");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn print_bounds(
    m: Option<usize>,
    k: Option<usize>,
    mu1: Option<f64>,
    mu2: Option<f64>,
    deltas: [Option<f64>; 3],
    mut sampled: bool,
    matrix: Option<PathBuf>,
    rip_trials: usize,
    seed: u64,
) -> Result<()> {
    let (mut m, mut mus, mut deltas) = (m, mu1.zip(mu2).map(|(mu1, mu2)| Mus { mu1, mu2 }), deltas);
    if mu1.is_some() != mu2.is_some() {
        bail!("give both --mu1 and --mu2 or neither");
    }
    if let Some(path) = matrix {
        let k = k.context("--matrix needs --k")?;
        let phi = io::read_matrix(&path)?;
        m = Some(phi.rows());
        mus = Some(Mus { mu1: model::mu1(&phi), mu2: model::mu2(&phi, k)? });
        for (slot, order) in deltas.iter_mut().zip([1, 3, 4]) {
            let kk = (order * k).min(phi.cols());
            let mode = if binomial(phi.cols(), kk) <= RipMode::DEFAULT_CAP as u128 {
                RipMode::exact()
            } else {
                RipMode::Sampled { trials: rip_trials, seed }
            };
            let est = model::rip_delta(&phi, kk, mode)?;
            sampled |= est.is_lower_bound;
            *slot = Some(est.delta);
        }
    }
    println!("{}", bounds::BoundReport::csv_header());
    let (nu, u) = bounds::sq_bounds_with_matrix(mus.map_or(1.0, |x| x.mu1), mus.map_or(1.0, |x| x.mu2))?;
    println!("{}", nu.csv_row());
    println!("{}", u.csv_row());
    println!("{}", bounds::enc_bounds().csv_row());
    if let (Some(dk), Some(mm), Some(kk)) = (deltas[0], m, k) {
        let vq = bounds::vq_bounds(dk, mm, kk, mus.map_or(1.0, |x| x.mu2))?;
        println!("{}", vq.first.csv_row());
        println!("{}", vq.second.csv_row());
    }
    if let [Some(k1), Some(k3), Some(k4)] = deltas {
        let d = Deltas { k: k1, three_k: k3, four_k: k4, sampled };
        for scheme in [Scheme::Sq, Scheme::Usq, Scheme::Enc, Scheme::Vq] {
            for algo in [Algo::Sp, Algo::Bp] {
                match bounds::recon_bound_report(scheme, algo, d, mus, m.unwrap_or(0), k.unwrap_or(0)) {
                    Ok(r) => println!("{}", r.csv_row()),
                    Err(e) => eprintln!("skipped {scheme:?}/{algo:?}: {e}"),
                }
            }
        }
    }
    Ok(())
}
