//! Reproducible experiment suites with CSV/JSON reports.

mod config;
mod experiments;
mod generate;
mod report;

pub use config::{ExperimentConfig, ExperimentKind, Params, Tolerances};
pub use experiments::{lattice_centers, run_experiment, stability_check, staircase, zero_chain_grid_log10};
pub use generate::{generate_random_chain, ChainBudget, MAX_ATTEMPTS};
pub use report::{chain_digest, emit_report, text_digest, Environment, ExperimentReport, ReportFormat, ReportRow, SuiteCheck};
