//! Command-line front end: TOML configuration with SI units, the five
//! analyses, and deterministic CSV plus summary output.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod presets;
pub mod run;
pub mod units;

pub use config::{load_config, parse_config, LoadedConfig};
pub use error::CliError;
pub use presets::Preset;
pub use run::{run, transient_config, Command, RunManifest, RunOutcome};
