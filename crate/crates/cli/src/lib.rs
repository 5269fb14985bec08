//! Scenario files, presets, and the subcommands of the `mmrd` binary.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod output;
pub mod presets;
pub mod scenario;

pub use error::{CliError, CliResult};
pub use scenario::{parse_scenario, Scenario};
