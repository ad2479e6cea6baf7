//! Configuration, table output and commands behind the `hic` binary.

pub mod commands;
pub mod config;
pub mod table;

pub use commands::{run_fit_beatnote, run_landscape, run_mc, run_params, run_sweep, CommandError};
pub use config::{parse_config, Config, ConfigError, Model, SweepSpec, SweepVariable};
pub use table::{emit_output, Format, OutputTable};
