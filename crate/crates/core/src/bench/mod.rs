//! Seeded Monte Carlo experiments and the theorem checks.

mod checks;
mod config;
mod experiment;
mod summary;

pub use checks::{
    bound_overlay_csv, clt_samples, ks_statistic, theorem1_check, theorem1_csv, theorem3_check, theorem3_csv, verify_clt,
    Theorem1Row, Theorem3Row,
};
pub use config::{Algorithm, BpSolver, ExperimentConfig, QuantizerKind, Training, SEED_ENV};
pub use experiment::{
    design_quantizers, entropy_coded_quantizer, run_experiment, run_with_quantizers, trial_matrix, trial_signal, training_samples,
    DesignedQuantizer, ExperimentOutput, TrialRecord,
};
pub use summary::{
    emit_all, emit_fig_data, fig1_csv, fig2a_csv, fig2b_csv, mean_stderr, records_csv, summarize, summary_csv, timings_csv, Summary,
};
