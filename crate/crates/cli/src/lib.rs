//! Front end for the `darkcool` binary: configuration, scans and the
//! single-run subcommands.

pub mod config;
pub mod scan;
pub mod tasks;

pub use config::{parse_config, preset, ConfigError, Quantity, ScanConfig};
pub use scan::{evaluate_point, point_params, run_scan, ScanOutput, ScanRow};

/// Exit codes of the binary.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const NUMERICAL: i32 = 2;
}
