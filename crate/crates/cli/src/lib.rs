//! Command-line front end: config resolution, panel CSV I/O and dispatch.

pub mod commands;
pub mod config;
pub mod panel_io;

pub use commands::{dispatch, RunError};
pub use config::{parse_config, CliConfig, UsageError};
pub use panel_io::{read_panel, write_panel, FormatError};
