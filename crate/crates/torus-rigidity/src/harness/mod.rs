//! Experiment orchestration: reproducible configs, flat result records,
//! the theorem-trend and scaling experiments, and the verification battery.
//!
//! Reproducibility contract: two runs with the same config (including
//! master_seed) produce identical records at any thread count, except for
//! the wall-clock columns (duration_ms, timestamp), which sit at the end of
//! the row so comparisons can strip them.

pub mod battery;
pub mod config;
pub mod experiments;
pub mod records;

pub use battery::{run_battery, BatteryCheck, BatteryReport};
pub use config::{ExperimentConfig, ExperimentKind, OutputFormat};
pub use experiments::{run_scaling, run_theorem_verify};
pub use records::{strip_volatile_columns, write_csv, write_json, ResultRecord};
