//! Experiment driver for the hybrid precoding solvers: TOML experiment specs,
//! seeded Monte Carlo sweeps with matched channels across schemes, a
//! fixed-phase comparison scheme, power tables, and result files.

pub mod baseline;
pub mod config;
pub mod dump;
pub mod error;
pub mod experiment;
pub mod output;
pub mod power;

pub use config::{ExperimentSpec, Scheme};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, run_trials, trial_channel, trial_seeds};
pub use output::{emit_results, read_results_csv, Format, ResultRow};
pub use power::{power_report, power_table, PowerRow};
