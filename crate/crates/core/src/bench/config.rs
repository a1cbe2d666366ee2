use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::GenMode;
use crate::recon::BpMethod;
use crate::{Error, Result};

/// Environment variable that replaces `master_seed` when set.
pub const SEED_ENV: &str = "QCS_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantizerKind {
    /// Lloyd-Max on the training distribution.
    Lloyd,
    /// Distortion-optimal step for a fixed number of uniform levels.
    Uniform,
    /// Uniform step `√(2πe)·σ·2^{-R}` over `±8σ`, meant to be Huffman coded.
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Sp,
    Bp,
    Qsp,
    Qbp,
}

impl Algorithm {
    pub fn is_modified(self) -> bool {
        matches!(self, Algorithm::Qsp | Algorithm::Qbp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Training {
    /// The Gaussian law of a measurement coordinate, `σ` from `training_sigma`.
    Analytic,
    /// Pooled measurements of independent `(Φ, x)` draws.
    #[default]
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BpSolver {
    #[default]
    Simplex,
    Admm,
}

impl From<BpSolver> for BpMethod {
    fn from(s: BpSolver) -> Self {
        match s {
            BpSolver::Simplex => BpMethod::Simplex,
            BpSolver::Admm => BpMethod::Admm,
        }
    }
}

macro_rules! snake_names {
    ($ty:ty { $($variant:ident => $name:literal),* $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(<$ty>::$variant => $name),* })
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s.trim() {
                    $($name => Ok(<$ty>::$variant),)*
                    other => Err(Error::Parse(format!("unknown {} `{other}`", stringify!($ty)))),
                }
            }
        }
    };
}

snake_names!(QuantizerKind { Lloyd => "lloyd", Uniform => "uniform", Entropy => "entropy" });
snake_names!(Algorithm { Sp => "sp", Bp => "bp", Qsp => "qsp", Qbp => "qbp" });

fn default_quantizers() -> Vec<QuantizerKind> {
    vec![QuantizerKind::Lloyd, QuantizerKind::Uniform]
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Sp, Algorithm::Bp, Algorithm::Qsp, Algorithm::Qbp]
}

fn default_training_samples() -> usize {
    1_000_000
}

fn default_bp_max_iter() -> usize {
    20_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    /// Bits per measurement; a rate `R` quantizer has `2^R` levels.
    pub rates: Vec<u32>,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default = "default_quantizers")]
    pub quantizers: Vec<QuantizerKind>,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub matrix_mode: GenMode,
    #[serde(default)]
    pub quantizer_training: Training,
    #[serde(default = "default_training_samples")]
    pub training_samples: usize,
    /// Source deviation for analytic training; `None` means `√(K/m)`, the
    /// deviation of one measurement coordinate.
    #[serde(default)]
    pub training_sigma: Option<f64>,
    /// SP/QSP iteration cap; `None` means `3K`.
    #[serde(default)]
    pub sp_max_iter: Option<usize>,
    #[serde(default)]
    pub bp_solver: BpSolver,
    #[serde(default = "default_bp_max_iter")]
    pub bp_max_iter: usize,
    /// Least-squares refit threshold for BP/QBP, relative to `‖x̂‖∞`.
    #[serde(default)]
    pub debias: Option<f64>,
}

impl ExperimentConfig {
    /// The §V setting: `m = 128`, `N = 256`, `K = 6`, rates 2 to 6, 1000 trials.
    pub fn paper_default() -> Self {
        Self {
            m: 128,
            n: 256,
            k: 6,
            rates: (2..=6).collect(),
            trials: 1000,
            master_seed: 20_100_301,
            quantizers: default_quantizers(),
            algorithms: default_algorithms(),
            matrix_mode: GenMode::ColumnNormalized,
            quantizer_training: Training::Empirical,
            training_samples: default_training_samples(),
            training_sigma: None,
            sp_max_iter: None,
            bp_solver: BpSolver::Simplex,
            bp_max_iter: default_bp_max_iter(),
            debias: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file and applies the `QCS_SEED` override.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
        cfg.apply_env()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.master_seed = v.trim().parse().map_err(|_| Error::Config(format!("{SEED_ENV}=`{v}` is not a 64-bit seed")))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.m == 0 || self.n == 0 {
            return bad(format!("m and N must be positive, got m={} N={}", self.m, self.n));
        }
        if self.k == 0 || self.k > self.n {
            return bad(format!("need 1 <= K <= N, got K={} N={}", self.k, self.n));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.rates.is_empty() || self.rates.iter().any(|&r| !(1..=20).contains(&r)) {
            return bad(format!("rates must be a nonempty list of integers in 1..=20, got {:?}", self.rates));
        }
        if self.quantizers.is_empty() || self.algorithms.is_empty() {
            return bad("quantizers and algorithms must be nonempty".into());
        }
        if self.quantizer_training == Training::Empirical {
            let levels = 1usize << self.rates.iter().max().unwrap();
            if self.training_samples < levels {
                return bad(format!("{} training samples cannot support {levels} levels", self.training_samples));
            }
        }
        if let Some(s) = self.training_sigma {
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("training_sigma must be positive, got {s}"));
            }
        }
        if self.bp_max_iter == 0 || self.sp_max_iter == Some(0) {
            return bad("iteration caps must be positive".into());
        }
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        self.training_sigma.unwrap_or((self.k as f64 / self.m as f64).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_takes_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"m": 16, "N": 32, "K": 2, "rates": [3], "trials": 2, "master_seed": 7}"#).unwrap();
        assert_eq!(cfg.quantizers, vec![QuantizerKind::Lloyd, QuantizerKind::Uniform]);
        assert_eq!(cfg.algorithms.len(), 4);
        assert_eq!(cfg.matrix_mode, GenMode::ColumnNormalized);
        assert_eq!(cfg.training_samples, 1_000_000);
        assert!((cfg.sigma() - 0.125f64.sqrt()).abs() < 1e-15);
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let base = r#""m": 16, "N": 32, "K": 2, "rates": [3], "master_seed": 7"#;
        assert!(matches!(ExperimentConfig::from_json(&format!("{{{base}, \"trials\": 1, \"extra\": 1}}")), Err(Error::Json(_))));
        assert!(matches!(ExperimentConfig::from_json(&format!("{{{base}, \"trials\": 0}}")), Err(Error::Config(_))));
        assert!(ExperimentConfig::from_json(r#"{"m": 16, "N": 4, "K": 5, "rates": [3], "trials": 1, "master_seed": 7}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"m": 16, "N": 32, "K": 2, "rates": [], "trials": 1, "master_seed": 7}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"m": 16, "N": 32, "K": 2, "rates": [0], "trials": 1, "master_seed": 7}"#).is_err());
    }

    #[test]
    fn paper_default_is_valid() {
        let cfg = ExperimentConfig::paper_default();
        cfg.validate().unwrap();
        assert_eq!((cfg.m, cfg.n, cfg.k, cfg.trials), (128, 256, 6, 1000));
    }

    #[test]
    fn names_round_trip() {
        for q in [QuantizerKind::Lloyd, QuantizerKind::Uniform, QuantizerKind::Entropy] {
            assert_eq!(q.to_string().parse::<QuantizerKind>().unwrap(), q);
        }
        for a in [Algorithm::Sp, Algorithm::Bp, Algorithm::Qsp, Algorithm::Qbp] {
            assert_eq!(a.to_string().parse::<Algorithm>().unwrap(), a);
        }
    }
}
