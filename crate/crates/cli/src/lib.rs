//! Command-line harness: JSON configs in, CSV and text reports out.
//!
//! Exit codes are 0 (success), 1 (usage, config or pipeline error) and
//! 2 (a tolerance or validation check failed).

pub mod commands;
pub mod config;

pub use commands::{
    cmd_examples, cmd_expm_check, cmd_partial_sums, cmd_radius, cmd_solve, rk_tolerance, Pipeline,
    Verdict,
};
pub use config::{parse_config, ConfigError, Grid, OracleSel, Outputs, RunConfig};
