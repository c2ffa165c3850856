//! Experiment orchestration: configuration files, sweeps, power-law fits,
//! and CSV/JSON output.

pub mod config;
pub mod fit;
pub mod output;
pub mod sweep;

pub use config::{PhaseRule, RunConfig, SweepAxis, SweepSpec};
pub use fit::{fit_power_law, FitQuantity, FitResult};
pub use output::{read_csv, write_csv, write_summary_json, RunSummary};
pub use sweep::{evaluate_point, run_drive_response, run_sweep};
