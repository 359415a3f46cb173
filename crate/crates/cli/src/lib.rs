//! Command-line front end for the scattering engines: stream evolution,
//! parameter scans, single-pass inspection, and the verification suites.
//!
//! Everything the binary does lives here so integration tests can call the
//! same entry points directly.

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;
pub mod verify;

pub use commands::{cmd_evolve, cmd_scan, cmd_sweep};
pub use config::{parse_pattern, AppError, CommonArgs, Mode, RunConfig};
pub use verify::{cmd_verify, suite_checks, CheckResult, SUITE_NAMES};
