//! Experiment configuration, seeded ensemble scans and CSV output.

mod config;
mod scan;

pub use crate::seed::derive_seed;
pub use config::{
    ExperimentConfig, GridSpec, ScanKind, ScanSpec, DEFAULT_REALIZATIONS, DEFAULT_SUSCEPTIBILITY_REALIZATIONS,
};
pub use scan::{
    estimated_evaluations, rate_curve, replay_row, run_rho_c_vs_n, run_scan, run_scan_to, run_scan_with,
    task_seed, write_rate_csv, write_rho_c_csv, RatePoint, RhoCRow, ScanCsvWriter, ScanResult, ScanRow,
    CSV_SCHEMA_VERSION, EVALUATION_WARN_THRESHOLD, RATE_COLUMNS, RHOC_COLUMNS, SCAN_COLUMNS,
};
